#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace stdtex {

struct PixelCoord {
  int x = 0;
  int y = 0;

  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Physical value range mapped onto [0, 1] at load time.
struct ValueDomain {
  double lo = 0.0;
  double hi = 1.0;

  double width() const noexcept { return hi - lo; }
  double normalize(double v) const noexcept { return (v - lo) / (hi - lo); }
  double denormalize(double u) const noexcept { return lo + u * (hi - lo); }

  friend bool operator==(const ValueDomain&, const ValueDomain&) = default;
};

/// A width x height grid of optional pixel values with 1 or 3 channels.
///
/// Values are held in normalized units (the declared domain maps to [0, 1]);
/// missing entries are tracked by an explicit presence mask. Queries outside
/// the grid are valid and report "missing".
class Field {
 public:
  Field() = default;
  Field(int width, int height, int channels = 1, ValueDomain domain = {});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return mask_.size(); }
  const ValueDomain& domain() const noexcept { return domain_; }
  void set_domain(ValueDomain d) noexcept { domain_ = d; }

  bool in_bounds(PixelCoord p) const noexcept {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }
  std::size_t index(PixelCoord p) const noexcept {
    return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(p.x);
  }
  PixelCoord coord(std::size_t index) const noexcept {
    return {static_cast<int>(index % static_cast<std::size_t>(width_)),
            static_cast<int>(index / static_cast<std::size_t>(width_))};
  }

  bool present(PixelCoord p) const noexcept { return in_bounds(p) && mask_[index(p)] != 0; }
  bool present(std::size_t i) const noexcept { return mask_[i] != 0; }

  /// First channel at `p`, or nullopt when out of bounds or masked.
  std::optional<double> get(PixelCoord p) const noexcept {
    if (!present(p)) return std::nullopt;
    return values_[index(p) * static_cast<std::size_t>(channels_)];
  }
  /// All channels at `p`; empty when out of bounds or masked.
  std::span<const double> channels_at(PixelCoord p) const noexcept {
    if (!present(p)) return {};
    return {values_.data() + index(p) * static_cast<std::size_t>(channels_),
            static_cast<std::size_t>(channels_)};
  }

  void set(PixelCoord p, double v);
  void set(PixelCoord p, std::span<const double> v);
  void clear(PixelCoord p);

  std::span<const double> data() const noexcept { return values_; }
  std::span<const std::uint8_t> mask() const noexcept { return mask_; }
  std::size_t present_count() const noexcept;

  /// Scalar view of an RGB field through the Y component of XYZ.
  Field to_gray() const;

  friend bool operator==(const Field&, const Field&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  ValueDomain domain_{};
  std::vector<double> values_;
  std::vector<std::uint8_t> mask_;
};

enum class FileFormat { Pgm, Png, Csv };
enum class ChannelMode { Auto, Gray, Rgb };

FileFormat parse_file_format(std::string_view name);

struct LoadOptions {
  FileFormat format = FileFormat::Pgm;
  /// Defaults: [0, maxval] for PGM, [0, 255] for PNG, [0, 1] for CSV.
  std::optional<ValueDomain> domain;
  ChannelMode channels = ChannelMode::Auto;
  std::string missing_token = "NaN";
};

Field load(const std::string& path, const LoadOptions& options);
Field parse_csv_raster(std::string_view text, const ValueDomain& domain,
                       std::string_view missing_token = "NaN");

enum class MapFormat { Pgm16, Csv };

/// Writes a scalar map. Pgm16 rescales defined values onto [0, 65535] and
/// records the original range in `<path>.txt`; Csv writes denormalized
/// values with `missing_token` at undefined cells.
void save_map(const Field& map, const std::string& path, MapFormat format,
              std::string_view missing_token = "NaN");

std::string format_csv_raster(const Field& map, std::string_view missing_token = "NaN");

}  // namespace stdtex
