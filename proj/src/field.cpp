#include "stdtex/field.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "stdtex/errors.hpp"
#include "stdtex/kernels.hpp"

namespace stdtex {

Field::Field(int width, int height, int channels, ValueDomain domain)
    : width_(width), height_(height), channels_(channels), domain_(domain) {
  if (width < 0 || height < 0) throw StructureError("field dimensions must be non-negative");
  if (channels != 1 && channels != 3) throw StructureError("field must have 1 or 3 channels");
  if (!(domain.hi > domain.lo)) throw ParameterError("value domain must satisfy lo < hi");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  values_.assign(n * static_cast<std::size_t>(channels), 0.0);
  mask_.assign(n, 0);
}

void Field::set(PixelCoord p, double v) {
  if (channels_ != 1) throw StructureError("scalar set on a multi-channel field");
  const double one[1] = {v};
  set(p, one);
}

void Field::set(PixelCoord p, std::span<const double> v) {
  if (!in_bounds(p)) throw StructureError("pixel out of bounds");
  if (v.size() != static_cast<std::size_t>(channels_)) throw StructureError("channel count mismatch");
  for (double c : v) {
    if (!std::isfinite(c)) throw ParameterError("pixel values must be finite");
  }
  const std::size_t i = index(p);
  std::copy(v.begin(), v.end(), values_.begin() + static_cast<std::ptrdiff_t>(i * v.size()));
  mask_[i] = 1;
}

void Field::clear(PixelCoord p) {
  if (!in_bounds(p)) return;
  const std::size_t i = index(p);
  mask_[i] = 0;
  std::fill_n(values_.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(channels_)),
              channels_, 0.0);
}

std::size_t Field::present_count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

Field Field::to_gray() const {
  if (channels_ == 1) return *this;
  Field out(width_, height_, 1, domain_);
  for (std::size_t i = 0; i < size(); ++i) {
    if (!mask_[i]) continue;
    const double* c = values_.data() + 3 * i;
    out.values_[i] = luminance({c[0], c[1], c[2]});
    out.mask_[i] = 1;
  }
  return out;
}

FileFormat parse_file_format(std::string_view name) {
  if (name == "pgm") return FileFormat::Pgm;
  if (name == "png") return FileFormat::Png;
  if (name == "csv" || name == "float-raster-csv") return FileFormat::Csv;
  throw ParameterError("unknown input format '" + std::string(name) + "'");
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    const char* begin = bytes_.data() + pos_;
    const char* end = bytes_.data() + bytes_.size();
    int value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || value < 0) throw FormatError("PGM: expected integer", line_, pos_);
    pos_ += static_cast<std::size_t>(ptr - begin);
    return value;
  }
  std::string_view magic() {
    if (bytes_.size() < 2) throw FormatError("PGM: truncated header", 1, 0);
    pos_ = 2;
    return bytes_.substr(0, 2);
  }
  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() const { return pos_ + 1; }
  std::size_t line() const { return line_; }
  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        if (c == '\n') ++line_;
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

Field load_pgm(const std::string& path, const LoadOptions& options) {
  const std::string bytes = read_file(path);
  PgmHeaderReader reader(bytes);
  const std::string_view magic = reader.magic();
  if (magic != "P5" && magic != "P2") throw FormatError("PGM: bad magic number", 1, 0);
  const int width = reader.next_int();
  const int height = reader.next_int();
  const int maxval = reader.next_int();
  if (maxval <= 0 || maxval > 65535) throw FormatError("PGM: maxval out of range", reader.line(), reader.pos());
  const ValueDomain domain = options.domain.value_or(ValueDomain{0.0, static_cast<double>(maxval)});
  Field f(width, height, 1, domain);

  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (magic == "P2") {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = reader.next_int();
      if (v > maxval) throw FormatError("PGM: sample exceeds maxval", reader.line(), reader.pos());
      f.set(f.coord(i), domain.normalize(v));
    }
    return f;
  }
  const std::size_t bps = maxval > 255 ? 2 : 1;
  const std::size_t start = reader.raster_start();
  if (bytes.size() < start + count * bps) {
    throw StructureError("PGM: raster shorter than " + std::to_string(width) + "x" + std::to_string(height));
  }
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + start);
  for (std::size_t i = 0; i < count; ++i) {
    const int v = bps == 1 ? raster[i] : (raster[2 * i] << 8) | raster[2 * i + 1];
    f.set(f.coord(i), domain.normalize(v));
  }
  return f;
}

Field load_png(const std::string& path, const LoadOptions& options) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError(std::string("PNG: ") + image.message, 0, 0);
  }
  const bool source_color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  const bool want_rgb = options.channels == ChannelMode::Rgb ||
                        (options.channels == ChannelMode::Auto && source_color);
  // Gray output from a color source goes through Y of XYZ, not libpng's mix.
  const bool read_rgb = want_rgb || source_color;
  image.format = read_rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError("PNG: " + msg, 0, 0);
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  const ValueDomain domain = options.domain.value_or(ValueDomain{0.0, 255.0});
  Field f(w, h, read_rgb ? 3 : 1, domain);
  const std::size_t stride = read_rgb ? 3 : 1;
  for (std::size_t i = 0; i < f.size(); ++i) {
    double c[3];
    for (std::size_t k = 0; k < stride; ++k) c[k] = domain.normalize(buffer[i * stride + k]);
    f.set(f.coord(i), std::span<const double>(c, stride));
  }
  if (read_rgb && !want_rgb) return f.to_gray();
  return f;
}

}  // namespace

Field parse_csv_raster(std::string_view text, const ValueDomain& domain,
                       std::string_view missing_token) {
  std::vector<std::vector<std::optional<double>>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<std::optional<double>> row;
    std::size_t cell_start = 0;
    while (true) {
      std::size_t comma = line.find(',', cell_start);
      if (comma == std::string_view::npos) comma = line.size();
      std::string_view cell = line.substr(cell_start, comma - cell_start);
      const std::size_t lead = cell.find_first_not_of(" \t");
      const std::size_t trail = cell.find_last_not_of(" \t");
      cell = lead == std::string_view::npos ? std::string_view{} : cell.substr(lead, trail - lead + 1);
      if (cell == missing_token) {
        row.emplace_back(std::nullopt);
      } else {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
          throw FormatError("CSV: invalid value '" + std::string(cell) + "'", line_no,
                            cell_start);
        }
        row.emplace_back(domain.normalize(v));
      }
      if (comma == line.size()) break;
      cell_start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw StructureError("CSV: line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                           " columns, expected " + std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("CSV: no data rows", line_no, 0);

  Field f(static_cast<int>(rows.front().size()), static_cast<int>(rows.size()), 1, domain);
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (const auto& v = rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]) f.set({x, y}, *v);
    }
  }
  return f;
}

Field load(const std::string& path, const LoadOptions& options) {
  switch (options.format) {
    case FileFormat::Pgm: return load_pgm(path, options);
    case FileFormat::Png: return load_png(path, options);
    case FileFormat::Csv:
      return parse_csv_raster(read_file(path), options.domain.value_or(ValueDomain{}), options.missing_token);
  }
  throw ParameterError("unsupported format");
}

std::string format_csv_raster(const Field& map, std::string_view missing_token) {
  if (map.channels() != 1) throw StructureError("CSV raster output needs a scalar map");
  std::string out;
  char buf[32];
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (x > 0) out += ',';
      if (auto v = map.get({x, y})) {
        const int len = std::snprintf(buf, sizeof buf, "%.17g", map.domain().denormalize(*v));
        out.append(buf, static_cast<std::size_t>(len));
      } else {
        out += missing_token;
      }
    }
    out += '\n';
  }
  return out;
}

void save_map(const Field& map, const std::string& path, MapFormat format,
              std::string_view missing_token) {
  if (map.channels() != 1) throw StructureError("save_map needs a scalar map");
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map.present(i) && !std::isfinite(map.data()[i])) throw ParameterError("map values must be finite");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");

  if (format == MapFormat::Csv) {
    out << format_csv_raster(map, missing_token);
  } else {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (!map.present(i)) {
        ++undefined;
        continue;
      }
      const double v = map.domain().denormalize(map.data()[i]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (undefined == map.size()) lo = hi = 0.0;
    out << "P5\n" << map.width() << ' ' << map.height() << "\n65535\n";
    std::vector<unsigned char> raster(2 * map.size(), 0);
    for (std::size_t i = 0; i < map.size(); ++i) {
      if (!map.present(i)) continue;
      const double v = map.domain().denormalize(map.data()[i]);
      const double scaled = hi > lo ? (v - lo) / (hi - lo) * 65535.0 : 0.0;
      const auto q = static_cast<unsigned>(std::lround(std::clamp(scaled, 0.0, 65535.0)));
      raster[2 * i] = static_cast<unsigned char>(q >> 8);
      raster[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));

    std::ofstream side(path + ".txt");
    if (!side) throw IoError("cannot write sidecar for '" + path + "'");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", lo);
    side << "min=" << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", hi);
    side << "max=" << buf << '\n';
    side << "width=" << map.width() << "\nheight=" << map.height() << "\nundefined=" << undefined << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace stdtex
