#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsrhpo {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-channel image, row-major, values in [0, max_val].
struct Raster {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;
  double max_val = 255.0;

  Raster() = default;
  Raster(std::size_t h, std::size_t w, double max_value, double fill = 0.0)
      : height(h), width(w), data(h * w, fill), max_val(max_value) {}

  double at(std::size_t row, std::size_t col) const { return data[row * width + col]; }
  double& at(std::size_t row, std::size_t col) { return data[row * width + col]; }

  /// Throws MetricError when the buffer length or value range is wrong.
  void validate() const;
};

/// PSNR of identical images.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

double mse(const Raster& a, const Raster& b);

/// 10*log10(max^2 / mse) in dB, or kPsnrInfinity when mse is zero.
double psnr(const Raster& a, const Raster& b);

struct SsimOptions {
  // unset: (0.01*max)^2 and (0.03*max)^2
  std::optional<double> c1;
  std::optional<double> c2;
  std::size_t window = 8;
};

/// Mean SSIM over non-overlapping window x window tiles; partial tiles at
/// the right and bottom edges are ignored.
double ssim(const Raster& a, const Raster& b, const SsimOptions& options = {});

/// "inf" for the infinity sentinel, shortest round-trip decimal otherwise.
std::string format_db(double value);

/// Binary PGM (P5). 8-bit samples for max_val < 256, big-endian 16-bit above.
Raster read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Raster& raster);

}  // namespace vsrhpo
