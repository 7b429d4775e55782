// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.
//
// usage: acceptance <csm executable> <golden eval report> <scratch dir>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "csm/conditional.hpp"
#include "csm/explore.hpp"
#include "csm/kernels.hpp"
#include "csm/shape.hpp"
#include "csm/stats.hpp"
#include "csm/synth.hpp"

using namespace csm;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool pass, const char *name, const std::string &detail) {
  std::printf("%s  %-26s %s\n", pass ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int shell(const std::string &cmd) {
  const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

// Dense Gaussian conditioning, written out independently of the library:
//   mu_c = mu + S_yO (S_OO + D)^{-1} (z - mu_O),  S_c = S - S_yO (S_OO + D)^{-1} S_Oy
void dense_condition(const Eigen::VectorXd &mu, const Eigen::MatrixXd &s,
                     const std::vector<Index> &obs, const std::vector<double> &sigma,
                     const Eigen::VectorXd &z, Eigen::VectorXd &mean, Eigen::MatrixXd &cov) {
  const Index q = static_cast<Index>(obs.size()), d = mu.size();
  Eigen::MatrixXd s_oo(q, q), s_yo(d, q);
  Eigen::VectorXd resid(q);
  for (Index a = 0; a < q; ++a) {
    resid[a] = z[a] - mu[obs[a]];
    s_yo.col(a) = s.col(obs[a]);
    for (Index b = 0; b < q; ++b) s_oo(a, b) = s(obs[a], obs[b]);
    s_oo(a, a) += sigma[a] * sigma[a];
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s_oo);
  mean = mu + s_yo * lu.solve(resid);
  cov = s - s_yo * lu.solve(s_yo.transpose());
}

LatentGaussian random_prior(Index d, Index r, double jitter, std::mt19937_64 &gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(d, r);
  for (Index i = 0; i < d; ++i)
    for (Index k = 0; k < r; ++k) a(i, k) = normal(gen);
  LatentGaussian g;
  g.basis = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
            Eigen::MatrixXd::Identity(d, r);
  g.eigenvalues.resize(r);
  double lambda = 2.0 + std::abs(normal(gen));
  for (Index k = 0; k < r; ++k) g.eigenvalues[k] = lambda, lambda *= 0.6;
  g.mean.resize(d);
  for (Index i = 0; i < d; ++i) g.mean[i] = 0.5 * normal(gen);
  g.jitter = jitter;
  return g;
}

void dense_oracle() {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<Index> dd(2, 20);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = dd(gen);
    const Index r = std::uniform_int_distribution<Index>(1, std::min<Index>(8, d))(gen);
    const Index q = std::uniform_int_distribution<Index>(1, std::min<Index>(10, d))(gen);
    const LatentGaussian g = random_prior(d, r, 1e-6, gen);
    std::vector<Index> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), gen);
    const std::vector<Index> obs(all.begin(), all.begin() + q);
    std::vector<double> sigma;
    for (Index a = 0; a < q; ++a)
      sigma.push_back(std::uniform_real_distribution<double>(0.0, 1.0)(gen) < 0.2
                          ? 0.0
                          : std::uniform_real_distribution<double>(0.01, 1.0)(gen));
    Eigen::VectorXd z(q);
    for (Index a = 0; a < q; ++a) z[a] = normal(gen);

    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    const Eigen::MatrixXd s = g.basis * g.eigenvalues.asDiagonal() * g.basis.transpose() +
                              g.jitter * Eigen::MatrixXd::Identity(d, d);
    dense_condition(g.mean, s, obs, sigma, z, mean, cov);
    const PosteriorSolver solver(g, obs, sigma);
    const Eigen::MatrixXd f = solver.posterior_loading();
    const Eigen::MatrixXd got = f * f.transpose() + Eigen::MatrixXd(solver.posterior_residual().asDiagonal());
    worst = std::max({worst, (solver.posterior_mean(z) - mean).cwiseAbs().maxCoeff(),
                      (got - cov).cwiseAbs().maxCoeff()});
  }
  const double elapsed = seconds_since(t0);
  report(worst <= 1e-8 && elapsed < 5.0, "dense-oracle",
         fmt("100 trials, max |diff| %.2e (<= 1e-8), %.3f s (< 5 s)", worst, elapsed));
}

void latent_normality() {
  synth::SyntheticConfig config;
  config.instances = 600;
  const auto c = synth::generate_cohort(config);
  const auto marginals = fit_marginals(c.data, c.specs);
  const Eigen::MatrixXd z = build_latent_matrix(c.data, marginals, 42, 0);
  double min_p = 1.0;
  Index rows = 0;
  for (Index i = 0; i < z.rows(); ++i) {
    if (!c.specs[static_cast<std::size_t>(i)].continuous()) continue;
    std::vector<double> row(static_cast<std::size_t>(z.cols()));
    for (Index j = 0; j < z.cols(); ++j) row[static_cast<std::size_t>(j)] = z(i, j);
    min_p = std::min(min_p, stats::ks_pvalue(stats::ks_statistic_normal(row), double(row.size())));
    ++rows;
  }
  // Ties: the mixed cohort with 50 tie-randomized rankings under two seeds.
  const JointModel a = fit_joint_model(c.data, c.specs, c.layout, {.rankings = 50, .seed = 1});
  const JointModel b = fit_joint_model(c.data, c.specs, c.layout, {.rankings = 50, .seed = 2});
  double drift = 0.0;
  for (Index k = 0; k < 5; ++k)
    drift = std::max(drift, std::abs(a.latent().eigenvalues[k] - b.latent().eigenvalues[k]) /
                                a.latent().eigenvalues[k]);
  report(min_p > 0.01 && drift < 0.05, "latent-normality",
         fmt("%ld continuous rows, min KS p %.3f (> 0.01); top-5 eigenvalue drift %.3f%% (< 5%%)",
             static_cast<long>(rows), min_p, 100 * drift));
}

void round_trip() {
  synth::SyntheticConfig config;
  config.instances = 300;
  const auto c = synth::generate_cohort(config);
  const JointModel model = fit_joint_model(c.data, c.specs, c.layout);
  double worst = 0.0;
  long mismatches = 0, checked = 0;
  for (Index j = 0; j < c.data.cols(); ++j) {
    const Eigen::VectorXd y = c.data.col(j);
    const Eigen::VectorXd back = model.from_latent(model.to_latent(y));
    for (Index i = 0; i < y.size(); ++i, ++checked) {
      if (model.spec(i).continuous())
        worst = std::max(worst, std::abs(back[i] - y[i]) / std::max(1.0, std::abs(y[i])));
      else
        mismatches += back[i] != y[i];
    }
  }
  report(worst <= 1e-9 && mismatches == 0, "round-trip",
         fmt("%ld values; level mismatches %ld; continuous max rel err %.2e (<= 1e-9)", checked,
             mismatches, worst));
}

void monotone_variance() {
  std::mt19937_64 gen(2);
  double worst = -1e300;
  for (int seq = 0; seq < 50; ++seq) {
    const Index d = 30, r = 8;
    const LatentGaussian g = random_prior(d, r, 1e-6, gen);
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), gen);
    Eigen::VectorXd prev = g.variance();
    std::vector<Index> obs;
    std::vector<double> sigma;
    for (Index k = 0; k < 15; ++k) {
      obs.push_back(order[static_cast<std::size_t>(k)]);
      sigma.push_back(std::uniform_real_distribution<double>(0.0, 0.5)(gen));
      const Eigen::VectorXd v = PosteriorSolver(g, obs, sigma).posterior_variance();
      worst = std::max(worst, (v - prev).maxCoeff());
      prev = v;
    }
  }
  report(worst <= 1e-10, "monotone-variance",
         fmt("50 sequences x 15 additions, max increase %.2e (<= 1e-10)", worst));
}

void table_structure() {
  const auto c = synth::generate_cohort({});
  const auto t0 = Clock::now();
  const auto rep = synth::run_reconstruction_experiment(c.data, c.specs, c.layout);
  bool shape_ok = rep.train_size == 600 && rep.validation_size == 193 && rep.rows.size() == 28;
  for (const auto &t : synth::kDefaultTargets)
    for (const auto &col : synth::kColumns) {
      const bool self = (t == "ventricles" && col == "ventricles") || (t == "wmh" && col == "wmh");
      shape_ok &= (rep.find(t, col) != nullptr) != self;
    }
  bool best = true;
  std::string worst_case;
  double worst_gap = -1e300;
  for (const auto &t : synth::kDefaultTargets) {
    const auto *comb = rep.find(t, "combined");
    if (!comb) continue;
    for (const auto &col : synth::kColumns) {
      const auto *other = rep.find(t, col);
      if (!other || col == "combined") continue;
      // Positive gap: combined is worse than `other` by that many standard errors.
      const double diff = comb->higher_is_better() ? other->mean - comb->mean
                                                   : comb->mean - other->mean;
      const double gap = diff / comb->stderr_;
      if (gap > worst_gap) worst_gap = gap, worst_case = t + " vs " + col;
      best &= diff <= comb->stderr_;
    }
  }
  report(shape_ok && best, "table-structure",
         fmt("600/193 split, %zu rows, 5 targets x 6 columns%s; combined worst gap %.2f SE (%s, <= 1); %.1f s",
             rep.rows.size(), shape_ok ? "" : " (structure mismatch)", worst_gap,
             worst_case.c_str(), seconds_since(t0)));
}

void determinism(const std::string &cli, const std::filesystem::path &golden,
                 const std::filesystem::path &dir) {
  const std::string cohort = (dir / "cohort").string();
  bool ok = shell(cli + " synth --out " + cohort) == 0;
  for (const char *name : {"m1.csmb", "m2.csmb"})
    ok &= shell(cli + " fit --cohort " + cohort + " --seed 42 --out " + (dir / name).string()) == 0;
  for (const char *name : {"r1.tsv", "r2.tsv"})
    ok &= shell(cli + " eval --seed 42 --out " + (dir / name).string()) == 0;
  const std::string m1 = slurp(dir / "m1.csmb"), r1 = slurp(dir / "r1.tsv");
  const bool models = ok && !m1.empty() && m1 == slurp(dir / "m2.csmb");
  const bool reports = ok && !r1.empty() && r1 == slurp(dir / "r2.tsv");
  const bool gold = reports && r1 == slurp(golden);
  report(models && reports && gold, "determinism",
         fmt("model files %s (%zu bytes), reports %s, golden %s", models ? "identical" : "DIFFER",
             m1.size(), reports ? "identical" : "DIFFER", gold ? "matches" : "DIFFERS"));
}

void performance() {
  synth::SyntheticConfig config;
  config.instances = 600;
  config.vertices = 1504;
  const auto c = synth::generate_cohort(config);
  const auto model =
      std::make_shared<const JointModel>(fit_joint_model(c.data, c.specs, c.layout));
  const explore::Service service(model);
  const std::string body = R"({"assignments": {"age": 72, "sex": "male", "mrs": 3}})";
  auto time_condition = [&](const std::string &rank) {
    double best = 1e300;
    for (int rep = 0; rep < 2; ++rep) {
      const auto t0 = Clock::now();
      const auto r = service.condition(body, {{"rank", rank}});
      const double dt = seconds_since(t0);
      if (r.status != 200) return 1e300;
      best = std::min(best, dt);
    }
    return best;
  };
  const double full = time_condition("-1"), r50 = time_condition("50");
  report(model->dimension() == 6025 && model->rank() == 599 && full <= 2.0 && r50 <= 0.1,
         "performance",
         fmt("d %ld r %ld: /condition %.3f s (<= 2 s); r=50: %.1f ms (<= 100 ms); %d thread(s)",
             static_cast<long>(model->dimension()), static_cast<long>(model->rank()), full,
             1e3 * r50, kernels::max_threads()));
}

void mass_conservation() {
  std::mt19937_64 gen(3);
  bool ok = true;
  long total = 0;
  for (int set = 0; set < 10; ++set) {
    shape::TriangleMesh mesh = synth::uv_sphere(50 + 97 * set);
    std::normal_distribution<double> jitter(0.0, 0.05);
    for (Index v = 0; v < mesh.vertex_count(); ++v)
      mesh.vertices.row(v) *= 20.0 * (1.0 + jitter(gen));
    const Index n = 1000 + 1500 * set;
    std::uniform_real_distribution<double> u(-25, 25);
    shape::Points voxels(n, 3);
    for (Index i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k) voxels(i, k) = std::round(u(gen));  // grid points: ties occur
    const auto counts = shape::assign_voxels_to_vertices(voxels, mesh);
    Eigen::VectorXd brute = Eigen::VectorXd::Zero(mesh.vertex_count());
    for (Index i = 0; i < n; ++i) {
      Index arg = 0;
      double best = (mesh.vertices.row(0) - voxels.row(i)).squaredNorm();
      for (Index v = 1; v < mesh.vertex_count(); ++v) {
        const double dv = (mesh.vertices.row(v) - voxels.row(i)).squaredNorm();
        if (dv < best) best = dv, arg = v;
      }
      brute[arg] += 1;
    }
    ok &= counts == brute && counts.sum() == static_cast<double>(n);
    total += n;
  }
  report(ok, "mass-conservation",
         fmt("10 mesh/voxel sets, %ld voxels: brute-force equal, totals conserved", total));
}

}  // namespace

int main(int argc, char **argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: acceptance <csm> <golden.tsv> <scratch dir>\n");
    return 2;
  }
  const std::filesystem::path dir = argv[3];
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  const std::vector<std::pair<const char *, std::function<void()>>> checks = {
      {"dense-oracle", dense_oracle},
      {"latent-normality", latent_normality},
      {"round-trip", round_trip},
      {"monotone-variance", monotone_variance},
      {"table-structure", table_structure},
      {"determinism", [&] { determinism(argv[1], argv[2], dir); }},
      {"performance", performance},
      {"mass-conservation", mass_conservation},
  };
  for (const auto &[name, check] : checks) {
    try {
      check();
    } catch (const std::exception &e) {
      report(false, name, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of %zu criteria failed\n", failures, checks.size());
  return failures == 0 ? 0 : 1;
}
