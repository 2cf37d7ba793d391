#include "vsrhpo/metrics.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace vsrhpo {

void Raster::validate() const {
  if (height == 0 || width == 0) throw MetricError("raster must have positive dimensions");
  if (data.size() != height * width) throw MetricError("raster buffer length does not match dimensions");
  if (!(max_val > 0.0)) throw MetricError("raster max_val must be positive");
  for (double v : data) {
    if (!(v >= 0.0 && v <= max_val)) throw MetricError("raster value outside [0, max_val]");
  }
}

namespace {

void check_pair(const Raster& a, const Raster& b) {
  a.validate();
  b.validate();
  if (a.height != b.height || a.width != b.width) throw MetricError("raster dimensions differ");
}

}  // namespace

double mse(const Raster& a, const Raster& b) {
  check_pair(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.data.size());
}

double psnr(const Raster& a, const Raster& b) {
  if (a.max_val != b.max_val) throw MetricError("rasters have different max_val");
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(a.max_val * a.max_val / e);
}

double ssim(const Raster& a, const Raster& b, const SsimOptions& opt) {
  check_pair(a, b);
  if (a.max_val != b.max_val) throw MetricError("rasters have different max_val");
  const std::size_t w = opt.window;
  if (w == 0) throw MetricError("ssim window must be positive");
  if (a.height < w || a.width < w) throw MetricError("raster smaller than the ssim window");
  const double c1 = opt.c1.value_or((0.01 * a.max_val) * (0.01 * a.max_val));
  const double c2 = opt.c2.value_or((0.03 * a.max_val) * (0.03 * a.max_val));
  if (!(c1 > 0.0 && c2 > 0.0)) throw MetricError("ssim constants must be positive");

  const double n = static_cast<double>(w * w);
  double total = 0.0;
  std::size_t tiles = 0;
  for (std::size_t r0 = 0; r0 + w <= a.height; r0 += w) {
    for (std::size_t c0 = 0; c0 + w <= a.width; c0 += w) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t r = r0; r < r0 + w; ++r) {
        for (std::size_t c = c0; c < c0 + w; ++c) {
          sa += a.at(r, c);
          sb += b.at(r, c);
        }
      }
      const double ma = sa / n, mb = sb / n;
      double va = 0.0, vb = 0.0, cov = 0.0;
      for (std::size_t r = r0; r < r0 + w; ++r) {
        for (std::size_t c = c0; c < c0 + w; ++c) {
          const double da = a.at(r, c) - ma, db = b.at(r, c) - mb;
          va += da * da;
          vb += db * db;
          cov += da * db;
        }
      }
      va /= n;
      vb /= n;
      cov /= n;
      total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++tiles;
    }
  }
  return total / static_cast<double>(tiles);
}

std::string format_db(double value) {
  if (std::isinf(value) && value > 0) return "inf";
  return nlohmann::json(value).dump();
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

Raster read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MetricError("cannot open '" + path + "'");
  if (pgm_token(in) != "P5") throw MetricError("'" + path + "' is not a binary PGM (P5)");
  std::size_t w = 0, h = 0;
  long maxv = 0;
  try {
    w = std::stoul(pgm_token(in));
    h = std::stoul(pgm_token(in));
    maxv = std::stol(pgm_token(in));
  } catch (const std::exception&) {
    throw MetricError("'" + path + "' has a malformed PGM header");
  }
  if (w == 0 || h == 0 || maxv <= 0 || maxv > 65535) throw MetricError("'" + path + "' has invalid PGM dimensions");
  Raster r(h, w, static_cast<double>(maxv));
  const bool wide = maxv > 255;
  for (auto& v : r.data) {
    int hi = in.get();
    if (hi == EOF) throw MetricError("'" + path + "' is truncated");
    if (wide) {
      int lo = in.get();
      if (lo == EOF) throw MetricError("'" + path + "' is truncated");
      v = static_cast<double>((hi << 8) | lo);
    } else {
      v = static_cast<double>(hi);
    }
    if (v > maxv) throw MetricError("'" + path + "' has a sample above maxval");
  }
  return r;
}

void write_pgm(const std::string& path, const Raster& r) {
  r.validate();
  const auto maxv = static_cast<long>(std::lround(r.max_val));
  if (maxv < 1 || maxv > 65535) throw MetricError("PGM max_val must be in [1, 65535]");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MetricError("cannot write '" + path + "'");
  out << "P5\n" << r.width << ' ' << r.height << '\n' << maxv << '\n';
  for (double v : r.data) {
    const auto s = static_cast<unsigned>(std::lround(v));
    if (maxv > 255) out.put(static_cast<char>((s >> 8) & 0xff));
    out.put(static_cast<char>(s & 0xff));
  }
  if (!out) throw MetricError("failed writing '" + path + "'");
}

}  // namespace vsrhpo
