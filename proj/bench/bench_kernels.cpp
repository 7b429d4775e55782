// Serial reference kernels vs the OpenMP kernels on a synthetic cohort.
// Prints one line per kernel: best-of-N wall time for each and the speedup,
// and checks that both produce identical output.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>

#include "CLI11.hpp"

#include "csm/joint_model.hpp"
#include "csm/kernels.hpp"
#include "csm/rng.hpp"
#include "csm/synth.hpp"

namespace {

double best_ms(int repeats, const std::function<void()> &body) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    body();
    const std::chrono::duration<double, std::milli> dt = std::chrono::steady_clock::now() - t0;
    best = std::min(best, dt.count());
  }
  return best;
}

void report(const char *name, double serial, double parallel, bool same) {
  std::printf("%-22s serial %9.2f ms  omp %9.2f ms  x%5.2f  %s\n", name, serial, parallel,
              serial / parallel, same ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Kernel benchmark"};
  csm::synth::SyntheticConfig config;
  config.instances = 600;
  config.vertices = 1000;
  int repeats = 3;
  app.add_option("--instances", config.instances);
  app.add_option("--vertices", config.vertices);
  app.add_option("--repeats", repeats)->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const auto cohort = csm::synth::generate_cohort(config);
  const auto marginals = csm::fit_marginals(cohort.data, cohort.specs);
  const Eigen::Index d = cohort.data.rows(), m = cohort.data.cols();
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(d));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  std::printf("threads %d  d %ld  M %ld\n", csm::kernels::max_threads(), static_cast<long>(d),
              static_cast<long>(m));

  namespace k = csm::kernels;
  bool all_same = true;

  Eigen::MatrixXd z_ref, z_omp;
  const double s1 = best_ms(repeats, [&] { k::reference::normal_scores(cohort.data, rows, marginals, 42, 0, z_ref); });
  const double p1 = best_ms(repeats, [&] { k::normal_scores(cohort.data, rows, marginals, 42, 0, z_omp); });
  report("normal_scores", s1, p1, z_ref == z_omp);
  all_same &= z_ref == z_omp;

  // Gram of the latent matrix in the compressed M x M form used by the fit.
  const Eigen::MatrixXd zt = z_omp.transpose();
  Eigen::MatrixXd g_ref = Eigen::MatrixXd::Zero(m, m), g_omp = g_ref;
  const double s2 = best_ms(1, [&] { k::reference::accumulate_gram(zt, 1.0 / m, g_ref); });
  const double p2 = best_ms(1, [&] { k::accumulate_gram(zt, 1.0 / m, g_omp); });
  const bool gram_same = (g_ref - g_omp).cwiseAbs().maxCoeff() <= 1e-12 * g_ref.cwiseAbs().maxCoeff();
  report("accumulate_gram", s2, p2, gram_same);
  all_same &= gram_same;

  Eigen::MatrixXd x_ref, x_omp;
  const double s3 = best_ms(repeats, [&] { k::reference::map_from_latent(z_omp, rows, marginals, x_ref); });
  const double p3 = best_ms(repeats, [&] { k::map_from_latent(z_omp, rows, marginals, x_omp); });
  report("map_from_latent", s3, p3, x_ref == x_omp);
  all_same &= x_ref == x_omp;

  // Voxel centres scattered around the first mesh.
  csm::Rng rng(7);
  const k::Points &vertices = cohort.meshes.front();
  k::Points voxels(200000, 3);
  for (Eigen::Index i = 0; i < voxels.rows(); ++i)
    for (int c = 0; c < 3; ++c) voxels(i, c) = 40.0 * (rng.uniform() - 0.5) * (c == 1 ? 1.6 : 1.0);
  std::vector<std::uint64_t> c_ref, c_omp;
  const double s4 = best_ms(1, [&] { c_ref = k::reference::nearest_vertex_counts(voxels, vertices); });
  const double p4 = best_ms(repeats, [&] { c_omp = k::nearest_vertex_counts(voxels, vertices); });
  report("nearest_vertex_counts", s4, p4, c_ref == c_omp);
  all_same &= c_ref == c_omp;

  return all_same ? 0 : 1;
}
