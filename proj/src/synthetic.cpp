#include <cmath>
#include <numbers>

#include "sratio/bench.hpp"
#include "sratio/error.hpp"
#include "sratio/rng.hpp"

namespace sratio {

namespace {

constexpr std::size_t kBlobDims = 5;

// Isotropic unit-variance blobs around fixed centers (5 dims). The centers do not depend
// on the sample seed, so every draw targets the same Bayes boundary.
Dataset blobs(int n_classes, double separation, std::size_t n, std::uint64_t seed) {
  Rng centers_rng(derive_seed(0x5eedb10bULL, "blob-centers", {static_cast<std::uint64_t>(n_classes)}));
  std::vector<double> centers(static_cast<std::size_t>(n_classes) * kBlobDims);
  for (auto& c : centers) c = separation * centers_rng.normal();

  Rng rng(derive_seed(seed, "blobs"));
  std::vector<double> f;
  f.reserve(n * kBlobDims);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(i % static_cast<std::size_t>(n_classes));
    labels[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < kBlobDims; ++j) f.push_back(centers[c * kBlobDims + j] + rng.normal());
  }
  return Dataset(std::move(f), kBlobDims, std::move(labels), n_classes);
}

Dataset moons(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "moons"));
  std::vector<double> f;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 2);
    const double t = std::numbers::pi * rng.uniform();
    const double x = c == 0 ? std::cos(t) : 1.0 - std::cos(t);
    const double y = c == 0 ? std::sin(t) : 0.5 - std::sin(t);
    f.push_back(x + 0.25 * rng.normal());
    f.push_back(y + 0.25 * rng.normal());
    labels[i] = c;
  }
  return Dataset(std::move(f), 2, std::move(labels), 2);
}

// Breiman's waveform recognition problem: random convex mixtures of two of three
// shifted triangular waves plus unit Gaussian noise on 21 features.
Dataset waveform(std::size_t n, std::uint64_t seed) {
  constexpr std::size_t d = 21;
  auto h = [](int shift, std::size_t j) {
    return std::max(6.0 - std::abs(static_cast<double>(j + 1) - 11.0 - shift), 0.0);
  };
  constexpr int pairs[3][2] = {{0, -4}, {0, 4}, {-4, 4}};
  Rng rng(derive_seed(seed, "waveform"));
  std::vector<double> f;
  f.reserve(n * d);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % 3);
    const double u = rng.uniform();
    for (std::size_t j = 0; j < d; ++j)
      f.push_back(u * h(pairs[c][0], j) + (1.0 - u) * h(pairs[c][1], j) + rng.normal());
    labels[i] = c;
  }
  return Dataset(std::move(f), d, std::move(labels), 3);
}

}  // namespace

std::vector<std::string> synthetic_names() {
  return {"gaussian-blobs-2", "gaussian-blobs-3", "gaussian-blobs-6", "interleaved-moons", "waveform-like"};
}

Dataset make_synthetic(const std::string& name, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw DataError("synthetic datasets need n >= 2");
  if (name == "gaussian-blobs-2") return blobs(2, 1.2, n, seed);
  if (name == "gaussian-blobs-3") return blobs(3, 1.6, n, seed);
  if (name == "gaussian-blobs-6") return blobs(6, 1.0, n, seed);
  if (name == "interleaved-moons") return moons(n, seed);
  if (name == "waveform-like") return waveform(n, seed);
  throw DataError("unknown synthetic generator: " + name);
}

}  // namespace sratio
