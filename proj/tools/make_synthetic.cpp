// Regenerates the synthetic fixture under data/synthetic: two smooth model
// surfaces on a (Z, N) grid, observations drawn from a fixed global mixture
// of them, and a train/evidence/test split.

#include <cstdio>
#include <iostream>
#include <string>

#include "bmmix/bmmix.hpp"

namespace {

double model_a(double z, double n) {
  return 0.05 * z + 0.02 * n + std::sin(z / 6.0);
}

double model_b(double z, double n) {
  return 0.04 * z + 0.03 * n + std::cos(n / 7.0);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out_dir = argc > 1 ? argv[1] : "data/synthetic";
  const double omega_a = 0.3, omega_b = 0.7, sigma = 0.1;

  bmmix::ensure_dir(out_dir);
  bmmix::RngStream rng(20240915, 0);

  bmmix::CsvWriter obs(out_dir + "/obs.csv");
  obs.header({"Z", "N", "value"});
  bmmix::CsvWriter fa(out_dir + "/model_a.csv");
  fa.header({"Z", "N", "f", "delta"});
  bmmix::CsvWriter fb(out_dir + "/model_b.csv");
  fb.header({"Z", "N", "f", "delta"});

  std::vector<std::size_t> train, evidence, test;
  std::size_t idx = 0;
  for (int z = 10; z <= 28; z += 2)
    for (int n = 10; n <= 48; n += 2) {
      const double zf = z, nf = n;
      const double a = model_a(zf, nf), b = model_b(zf, nf);
      const double y = omega_a * a + omega_b * b + sigma * rng.normal();
      obs.numeric_row(zf, nf, y);
      // Small systematic offsets standing in for model corrections.
      fa.numeric_row(zf, nf, a, 0.01 * std::sin(nf / 9.0));
      fb.numeric_row(zf, nf, b, 0.01 * std::cos(zf / 8.0));
      if (idx % 5 == 4)
        test.push_back(idx);
      else
        train.push_back(idx);
      ++idx;
    }
  for (std::size_t i = 0; i < 20; ++i) evidence.push_back(train[i * 8]);

  bmmix::SplitSpec split;
  split.train_ids = train;
  split.evidence_ids = evidence;
  split.test_ids = test;
  bmmix::save_split(split, out_dir + "/split.json");

  std::cout << "wrote " << idx << " locations to " << out_dir << " (train " << train.size()
            << ", evidence " << evidence.size() << ", test " << test.size() << ")\n";
  return 0;
}
