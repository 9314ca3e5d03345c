#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

#include "henonlab/errors.hpp"
#include "henonlab/slices.hpp"

namespace henonlab {

namespace {

constexpr std::array<char, 4> kMagic = {'H', 'S', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxSide = 1u << 16;
constexpr std::uint32_t kMaxProvenance = 1u << 24;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw ValidationError("hslc", "truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_hslc(const SliceImage& img, std::ostream& out) {
  const std::size_t cells = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
  if (img.width <= 0 || img.height <= 0 || img.rate.size() != cells || img.status.size() != cells) {
    throw ValidationError("image", "inconsistent dimensions");
  }
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
  put<double>(out, img.window.x0);
  put<double>(out, img.window.y0);
  put<double>(out, img.window.x1);
  put<double>(out, img.window.y1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(img.provenance.size()));
  out.write(img.provenance.data(), static_cast<std::streamsize>(img.provenance.size()));
  for (std::size_t i = 0; i < cells; ++i) {
    put<float>(out, img.rate[i]);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(img.status[i]));
  }
}

SliceImage read_hslc(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ValidationError("hslc", "bad magic");
  if (get<std::uint32_t>(in) != kVersion) throw ValidationError("hslc", "unsupported version");
  const std::uint32_t w = get<std::uint32_t>(in);
  const std::uint32_t h = get<std::uint32_t>(in);
  if (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide) throw ValidationError("hslc", "bad dimensions");
  SliceImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.window.x0 = get<double>(in);
  img.window.y0 = get<double>(in);
  img.window.x1 = get<double>(in);
  img.window.y1 = get<double>(in);
  const std::uint32_t len = get<std::uint32_t>(in);
  if (len > kMaxProvenance) throw ValidationError("hslc", "provenance too long");
  img.provenance.resize(len);
  if (len > 0 && !in.read(img.provenance.data(), len)) throw ValidationError("hslc", "truncated file");
  const std::size_t cells = static_cast<std::size_t>(w) * h;
  img.rate.resize(cells);
  img.status.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    img.rate[i] = get<float>(in);
    const std::uint8_t s = get<std::uint8_t>(in);
    if (s > static_cast<std::uint8_t>(CellStatus::undecided)) throw ValidationError("hslc", "bad cell status");
    img.status[i] = static_cast<CellStatus>(s);
  }
  img.partial = img.provenance.find("\"partial\":true") != std::string::npos;
  return img;
}

Rgb palette_color(CellStatus status, float rate) {
  switch (status) {
    case CellStatus::bounded:
    case CellStatus::boundary:
      return {0, 0, 0};
    case CellStatus::undecided:
      return {128, 128, 128};
    case CellStatus::escaped:
      break;
  }
  // Triangle wave in log(1 + rate) between a deep blue and an orange.
  const double v = std::log1p(std::max(0.0, static_cast<double>(rate))) * 4.0;
  const double phase = v - 2.0 * std::floor(v / 2.0);
  const double t = phase <= 1.0 ? phase : 2.0 - phase;
  const auto mix = [t](double lo, double hi) { return static_cast<std::uint8_t>(std::lround(lo + (hi - lo) * t)); };
  return {mix(20, 255), mix(40, 160), mix(140, 40)};
}

void write_ppm(const SliceImage& img, std::ostream& out) {
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  for (int row = 0; row < img.height; ++row) {
    for (int col = 0; col < img.width; ++col) {
      const std::size_t i = img.index(col, row);
      const Rgb c = palette_color(img.status[i], img.rate[i]);
      const char px[3] = {static_cast<char>(c.r), static_cast<char>(c.g), static_cast<char>(c.b)};
      out.write(px, 3);
    }
  }
}

}  // namespace henonlab
