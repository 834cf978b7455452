#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vulnatlas/geomesh.hpp"

namespace vulnatlas {

enum class ColumnKind { Count, RatePercent, CurrencyUsd, IndexScore, Categorical };
enum class Direction { RiskIncreases, RiskDecreases };

std::string_view to_string(ColumnKind kind);
ColumnKind parse_column_kind(std::string_view text);
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view text);

using NumericValues = std::vector<std::optional<double>>;
using LabelValues = std::vector<std::optional<std::string>>;

/// One attribute vector. Numeric kinds use `numbers`, categorical uses
/// `labels`; missing entries are std::nullopt.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::RatePercent;
  std::string source;
  NumericValues numbers;
  LabelValues labels;

  bool is_categorical() const { return kind == ColumnKind::Categorical; }
  std::size_t size() const { return is_categorical() ? labels.size() : numbers.size(); }
  std::size_t missing_count() const;
  double missing_fraction() const;
};

/// Declarative description of one input variable.
struct IndicatorSpec {
  std::string name;
  std::string table;  // source tag of the attribute table that carries it
  std::string source_column;
  std::optional<std::string> denominator_column;
  ColumnKind kind = ColumnKind::RatePercent;
  Direction direction = Direction::RiskIncreases;
  bool winsorize = false;
  bool log_if_skewed = false;
};

/// Joined analytical table: one row per tract keyed by 11-digit GEOID.
class TractFrame {
 public:
  TractFrame() = default;
  explicit TractFrame(std::vector<std::string> geoids);

  std::size_t rows() const { return geoids_.size(); }
  const std::vector<std::string>& geoids() const { return geoids_; }
  std::optional<std::size_t> row_of(std::string_view geoid) const;

  bool has_geometry() const { return !geometry_.empty(); }
  const std::vector<geo::MultiPolygon>& geometry() const { return geometry_; }
  void set_geometry(std::vector<geo::MultiPolygon> geometry);

  const std::vector<Column>& columns() const { return columns_; }
  bool has_column(std::string_view name) const;
  const Column& column(std::string_view name) const;
  void add_column(Column column);
  void replace_column(Column column);

  /// Numeric values with no missing entries; throws MissingValues otherwise.
  std::vector<double> complete_values(std::string_view name) const;

  TractFrame select_rows(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> geoids_;
  std::vector<geo::MultiPolygon> geometry_;
  std::vector<Column> columns_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::map<std::string, std::size_t, std::less<>> row_index_;
};

}  // namespace vulnatlas
