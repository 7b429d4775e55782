// csm: fit, condition, sample, traverse modes, synthesize cohorts and run the
// reconstruction benchmark. Every command is a thin wrapper over the library.
//
// Exit status is 0 on success and the ErrorCode value otherwise; failures
// print a single line "error: <Class>: <message>" on stderr.

#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "csm/cross_validation.hpp"
#include "csm/error.hpp"
#include "csm/explore.hpp"
#include "csm/serialization.hpp"
#include "csm/shape.hpp"
#include "csm/synth.hpp"
#include "csm/text.hpp"

namespace {

using namespace csm;

struct SigmaFlags {
  std::optional<double> shape, feature, indicator;

  void add(CLI::App *app) {
    app->add_option("--sigma-shape", shape, "Observation noise for coordinates (latent scale)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--sigma-feature", feature, "Observation noise for features")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--sigma-indicator", indicator, "Observation noise for indicators")
        ->check(CLI::NonNegativeNumber);
  }
  BlockSigma apply(BlockSigma base) const {
    if (shape) base.set(Block::kCoordinate, *shape);
    if (feature) base.set(Block::kFeature, *feature);
    if (indicator) base.set(Block::kIndicator, *indicator);
    return base;
  }
  std::map<Block, double> overrides() const {
    std::map<Block, double> out;
    if (shape) out[Block::kCoordinate] = *shape;
    if (feature) out[Block::kFeature] = *feature;
    if (indicator) out[Block::kIndicator] = *indicator;
    return out;
  }
};

struct FitFlags {
  std::uint64_t seed = 42;
  std::optional<Index> rank;
  double jitter = 1e-6;
  int rankings = 50;

  void add(CLI::App *app) {
    app->add_option("--seed", seed, "Seed for tie-randomized rankings and splits");
    app->add_option("--rank", rank, "Number of eigenpairs kept (default M - 1)");
    app->add_option("--jitter", jitter, "Isotropic latent residual variance")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--rankings", rankings, "Tie-randomized rankings T")->check(CLI::PositiveNumber);
  }
  FitConfig config() const { return {rankings, seed, rank, jitter}; }
};

void emit(const std::string &out, const std::string &content) {
  if (out.empty() || out == "-")
    std::cout << content;
  else
    write_file_atomic(out, std::string_view(content));
}

std::map<std::string, std::string> parse_assignments(const std::vector<std::string> &sets) {
  std::map<std::string, std::string> out;
  for (const std::string &s : sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCode::kUsage,
            "--set expects name=value, got '" + s + "'");
    require(out.emplace(s.substr(0, eq), s.substr(eq + 1)).second, ErrorCode::kUsage,
            "variable '" + s.substr(0, eq) + "' assigned twice");
  }
  return out;
}

shape::Cohort load_cohort_flags(const std::string &cohort, std::string meshes,
                                std::string indicators, std::string spec) {
  if (!cohort.empty()) {
    if (meshes.empty()) meshes = cohort;
    if (indicators.empty()) indicators = cohort + "/indicators.tsv";
    if (spec.empty()) spec = cohort + "/spec.json";
  }
  require(!meshes.empty() && !indicators.empty() && !spec.empty(), ErrorCode::kUsage,
          "give --cohort DIR or all of --meshes, --indicators and --spec");
  return shape::load_cohort(meshes, indicators, shape::read_cohort_spec(spec));
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Gaussian copula shape models: fit, condition, sample and benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "csm 1.0");

  // fit
  auto *fit = app.add_subcommand("fit", "Fit a joint model to a cohort");
  std::string cohort_dir, mesh_dir, indicators_file, spec_file, out;
  FitFlags fit_flags;
  SigmaFlags fit_sigma;
  bool cross_validate = false;
  int folds = 3;
  fit->add_option("--cohort", cohort_dir, "Directory with meshes, indicators.tsv and spec.json");
  fit->add_option("--meshes", mesh_dir, "Directory of corresponded meshes");
  fit->add_option("--indicators", indicators_file, "Indicator table (id column first)");
  fit->add_option("--spec", spec_file, "Variable declarations (JSON)");
  fit->add_option("--out", out, "Model file (.csmb for the binary form)")->required();
  fit->add_flag("--cross-validate", cross_validate, "Choose per-block sigma by cross-validation");
  fit->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  fit_flags.add(fit);
  fit_sigma.add(fit);

  // condition
  auto *cond = app.add_subcommand("condition", "Condition a model on observed values");
  std::string model_path;
  std::vector<std::string> sets;
  SigmaFlags cond_sigma;
  std::uint64_t seed = 42;
  Index rank = -1, samples = 1000, modes = 5;
  std::size_t bins = 20;
  cond->add_option("--model", model_path, "Model file")->required();
  cond->add_option("--set", sets, "Observed value name=value (repeatable)");
  cond->add_option("--out", out, "Summary JSON (stdout when omitted)");
  cond->add_option("--seed", seed, "Sampling seed");
  cond->add_option("--rank", rank, "Rank truncation of the prior");
  cond->add_option("--samples", samples, "Samples per histogram")->check(CLI::PositiveNumber);
  cond->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
  cond->add_option("--modes", modes, "Number of posterior modes")->check(CLI::NonNegativeNumber);
  cond_sigma.add(cond);

  // sample
  auto *smp = app.add_subcommand("sample", "Draw samples from a (conditional) model");
  Index n = 1000;
  std::vector<std::string> variables;
  SigmaFlags smp_sigma;
  smp->add_option("--model", model_path, "Model file")->required();
  smp->add_option("--n", n, "Number of samples")->check(CLI::PositiveNumber);
  smp->add_option("--set", sets, "Observed value name=value (repeatable)");
  smp->add_option("--variables", variables, "Variables to emit (default: indicators)")
      ->delimiter(',');
  smp->add_option("--out", out, "Output TSV (stdout when omitted)");
  smp->add_option("--seed", seed, "Sampling seed");
  smp->add_option("--rank", rank, "Rank truncation of the prior");
  smp_sigma.add(smp);

  // mode
  auto *mode = app.add_subcommand("mode", "Instance along a principal mode");
  Index k = 1;
  double t = 0.0;
  SigmaFlags mode_sigma;
  mode->add_option("--model", model_path, "Model file")->required();
  mode->add_option("--k", k, "Mode index, 1-based");
  mode->add_option("--t", t, "Coefficient in standard deviations");
  mode->add_option("--set", sets, "Condition first on name=value (repeatable)");
  mode->add_option("--out", out, "Instance JSON (stdout when omitted)");
  mode->add_option("--rank", rank, "Rank truncation of the prior");
  mode->add_option("--mesh", spec_file, "Also write the instance mesh (CSM1)");
  mode_sigma.add(mode);

  // synth
  auto *syn = app.add_subcommand("synth", "Write a synthetic cohort");
  synth::SyntheticConfig synth_config;
  const auto add_synth_options = [&](CLI::App *sub) {
    sub->add_option("--instances", synth_config.instances, "Cohort size M");
    sub->add_option("--vertices", synth_config.vertices, "Mesh vertex count N");
    sub->add_option("--indicator-count", synth_config.indicators, "Indicator count K (<= 9)");
    sub->add_option("--factors", synth_config.factors, "Latent factor count");
    sub->add_option("--noise", synth_config.noise, "Scale of all idiosyncratic noise");
  };
  syn->add_option("--out", out, "Output directory")->required();
  syn->add_option("--seed", synth_config.seed, "Generator seed");
  add_synth_options(syn);

  // eval
  auto *ev = app.add_subcommand("eval", "Run the reconstruction benchmark");
  std::optional<Index> train;
  bool no_cv = false, include_self = false, continuous_ordinal = false;
  std::string table_out;
  FitFlags eval_flags;
  SigmaFlags eval_sigma;
  std::uint64_t synth_seed = 42;
  ev->add_option("--cohort", cohort_dir, "Cohort directory (default: synthetic cohort)");
  ev->add_option("--meshes", mesh_dir, "Directory of corresponded meshes");
  ev->add_option("--indicators", indicators_file, "Indicator table");
  ev->add_option("--spec", spec_file, "Variable declarations (JSON)");
  ev->add_option("--out", out, "Report TSV (stdout when omitted)");
  ev->add_option("--table", table_out, "Also write the formatted table here");
  ev->add_option("--train", train, "Training split size (default scaled 600/793)");
  ev->add_flag("--no-cv", no_cv, "Use the sigma flags instead of cross-validation");
  ev->add_flag("--include-self", include_self, "Add self-prediction rows for block targets");
  ev->add_flag("--continuous-ordinal", continuous_ordinal,
               "Score ordinal targets on the interpolated quantile");
  ev->add_option("--folds", folds, "Cross-validation folds")->check(CLI::Range(2, 100));
  ev->add_option("--synth-seed", synth_seed, "Seed of the synthetic cohort");
  eval_flags.add(ev);
  eval_sigma.add(ev);
  add_synth_options(ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: UsageError: " << e.what() << "\n";
    return static_cast<int>(ErrorCode::kUsage);
  }

  try {
    if (*fit) {
      shape::Cohort cohort = load_cohort_flags(cohort_dir, mesh_dir, indicators_file, spec_file);
      BlockSigma sigma = fit_sigma.apply({});
      if (cross_validate)
        sigma = fit_sigma.apply(cross_validate_sigma(cohort.data, cohort.specs, cohort.layout,
                                                     default_sigma_grid(),
                                                     {folds, fit_flags.seed, fit_flags.config()})
                                    .sigma);
      const JointModel model =
          fit_joint_model(cohort.data, cohort.specs, cohort.layout, fit_flags.config())
              .with_default_sigma(sigma);
      save_model(model, out);
      std::cout << "M " << model.metadata().training_size << "\nd " << model.dimension()
                << "\nr " << model.rank() << "\nleading_eigenvalues";
      for (Index i = 0; i < std::min<Index>(5, model.rank()); ++i)
        std::cout << ' ' << text::format_significant(model.latent().eigenvalues[i], 9);
      std::cout << "\nsigma " << text::format_double(sigma.coordinate) << ' '
                << text::format_double(sigma.feature) << ' '
                << text::format_double(sigma.indicator) << "\n";
    } else if (*cond) {
      require(!sets.empty(), ErrorCode::kUsage, "condition needs at least one --set name=value");
      const JointModel model = load_model(model_path);
      explore::ConditionRequest req;
      req.assignments = parse_assignments(sets);
      req.sigma = cond_sigma.overrides();
      req.seed = seed;
      req.rank = rank;
      req.samples = samples;
      req.modes = modes;
      req.bins = bins;
      emit(out, explore::condition_summary(model, req).dump() + "\n");
    } else if (*smp) {
      const JointModel model = load_model(model_path);
      explore::ConditionRequest req;
      req.assignments = parse_assignments(sets);
      req.sigma = smp_sigma.overrides();
      req.seed = seed;
      req.rank = rank;
      req.samples = n;
      const explore::Json j = explore::sample_response(model, req, variables);
      std::ostringstream tsv;
      const auto &names = j["variables"];
      for (std::size_t i = 0; i < names.size(); ++i)
        tsv << (i ? "\t" : "") << names[i].get<std::string>();
      tsv << "\n";
      for (const auto &row : j["samples"]) {
        for (std::size_t i = 0; i < row.size(); ++i)
          tsv << (i ? "\t" : "") << text::format_double(row[i].get<double>());
        tsv << "\n";
      }
      emit(out, tsv.str());
    } else if (*mode) {
      const JointModel model = load_model(model_path);
      explore::ConditionRequest req;
      req.assignments = parse_assignments(sets);
      req.sigma = mode_sigma.overrides();
      req.rank = rank;
      const explore::Json j = explore::mode_response(model, req, k, t);
      explore::Json instance = {{"k", j["k"]}, {"t", j["t"]}, {"eigenvalue", j["eigenvalue"]}};
      instance["instance"] = j["instance"];
      emit(out, instance.dump() + "\n");
      if (!spec_file.empty()) {
        const Eigen::VectorXd latent = Eigen::Map<const Eigen::VectorXd>(
            j["latent"].get<std::vector<double>>().data(), model.dimension());
        const auto parts = shape::devectorize(model.from_latent(latent), model.layout());
        write_file_atomic(spec_file, std::string_view(shape::format_csm1(
                                         {parts.vertices, model.layout().faces})));
      }
    } else if (*syn) {
      const synth::SyntheticCohort cohort = synth::generate_cohort(synth_config);
      shape::write_cohort(out, cohort.ids, cohort.data, cohort.layout, cohort.spec);
      std::cout << "M " << cohort.data.cols() << "\nN " << cohort.layout.vertex_count << "\nK "
                << cohort.layout.indicator_count() << "\nd " << cohort.layout.dimension() << "\n";
    } else if (*ev) {
      Eigen::MatrixXd data;
      std::vector<VariableSpec> specs;
      InstanceLayout layout;
      if (!cohort_dir.empty() || !mesh_dir.empty()) {
        shape::Cohort cohort = load_cohort_flags(cohort_dir, mesh_dir, indicators_file, spec_file);
        data = std::move(cohort.data);
        specs = std::move(cohort.specs);
        layout = std::move(cohort.layout);
      } else {
        synth_config.seed = synth_seed;
        synth::SyntheticCohort cohort = synth::generate_cohort(synth_config);
        data = std::move(cohort.data);
        specs = std::move(cohort.specs);
        layout = std::move(cohort.layout);
      }
      synth::ExperimentOptions options;
      options.train_size = train;
      options.seed = eval_flags.seed;
      options.fit = eval_flags.config();
      options.cross_validate = !no_cv;
      options.folds = folds;
      options.sigma = eval_sigma.apply({});
      options.include_self = include_self;
      options.continuous_ordinal = continuous_ordinal;
      const synth::ExperimentReport report =
          synth::run_reconstruction_experiment(data, specs, layout, options);
      emit(out, report.to_tsv());
      if (!table_out.empty()) write_file_atomic(table_out, std::string_view(report.to_table()));
      if (!out.empty() && out != "-") std::cout << report.to_table();
    }
  } catch (const Error &e) {
    std::cerr << "error: " << e.class_name() << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception &e) {
    std::cerr << "error: InternalError: " << e.what() << "\n";
    return 70;
  }
  return 0;
}
