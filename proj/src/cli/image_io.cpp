#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "phasekit/cli.hpp"

namespace phasekit::cli {

namespace {

constexpr std::array<char, 4> kMagic{'P', 'K', 'I', 'M'};

void put_u32(std::ostream& os, std::uint32_t v) {
  const char bytes[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                         char((v >> 24) & 0xff)};
  os.write(bytes, 4);
}

void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = char((bits >> (8 * i)) & 0xff);
  os.write(bytes, 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char bytes[4];
  if (!is.read(reinterpret_cast<char*>(bytes), 4)) throw IoError("image: truncated header");
  return std::uint32_t(bytes[0]) | std::uint32_t(bytes[1]) << 8 | std::uint32_t(bytes[2]) << 16 |
         std::uint32_t(bytes[3]) << 24;
}

double decode_f64(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_image(std::ostream& os, const ComplexImage& image) {
  if (image.height() <= 0 || image.width() <= 0) throw std::invalid_argument("image: empty grid");
  os.write(kMagic.data(), kMagic.size());
  put_u32(os, std::uint32_t(image.width()));
  put_u32(os, std::uint32_t(image.height()));
  put_u32(os, kComplex128);
  for (Index k = 0; k < image.size(); ++k) {
    put_f64(os, image.vec()[k].real());
    put_f64(os, image.vec()[k].imag());
  }
  if (!os) throw IoError("image: write failed");
}

void write_image(const std::filesystem::path& path, const ComplexImage& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_image(os, image);
}

ComplexImage read_image(std::istream& is) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), magic.size())) throw IoError("image: truncated header");
  if (magic != kMagic) throw IoError("image: bad magic");
  const std::uint32_t width = get_u32(is);
  const std::uint32_t height = get_u32(is);
  const std::uint32_t dtype = get_u32(is);
  if (dtype != kComplex128) throw IoError("image: unsupported dtype " + std::to_string(dtype));
  if (width == 0 || height == 0 || width > std::uint32_t(std::numeric_limits<int>::max()) ||
      height > std::uint32_t(std::numeric_limits<int>::max()) / width)
    throw IoError("image: bad dimensions");
  const Index count = Index(width) * Index(height);
  CVector data(count);
  unsigned char buf[16];
  for (Index k = 0; k < count; ++k) {
    if (!is.read(reinterpret_cast<char*>(buf), 16)) throw IoError("image: truncated payload");
    data[k] = cplx(decode_f64(buf), decode_f64(buf + 8));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw IoError("image: trailing bytes");
  try {
    return ComplexImage(int(height), int(width), std::move(data));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("image: ") + e.what());
  }
}

ComplexImage read_image(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read image " + path.string());
  return read_image(is);
}

}  // namespace phasekit::cli
