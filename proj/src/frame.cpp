#include "vulnatlas/frame.hpp"

#include <algorithm>

#include "vulnatlas/error.hpp"

namespace vulnatlas {

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Count: return "count";
    case ColumnKind::RatePercent: return "rate_percent";
    case ColumnKind::CurrencyUsd: return "currency_usd";
    case ColumnKind::IndexScore: return "index_score";
    case ColumnKind::Categorical: return "categorical";
  }
  return "count";
}

ColumnKind parse_column_kind(std::string_view text) {
  if (text == "count") return ColumnKind::Count;
  if (text == "rate_percent") return ColumnKind::RatePercent;
  if (text == "currency_usd") return ColumnKind::CurrencyUsd;
  if (text == "index_score") return ColumnKind::IndexScore;
  if (text == "categorical") return ColumnKind::Categorical;
  throw Error(ErrorCode::ConfigError, "unknown column kind '" + std::string(text) + "'");
}

std::string_view to_string(Direction d) {
  return d == Direction::RiskIncreases ? "risk_increases" : "risk_decreases";
}

Direction parse_direction(std::string_view text) {
  if (text == "risk_increases") return Direction::RiskIncreases;
  if (text == "risk_decreases") return Direction::RiskDecreases;
  throw Error(ErrorCode::ConfigError, "unknown direction '" + std::string(text) + "'");
}

std::size_t Column::missing_count() const {
  if (is_categorical()) {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](const auto& v) { return !v; }));
  }
  return static_cast<std::size_t>(
      std::count_if(numbers.begin(), numbers.end(), [](const auto& v) { return !v; }));
}

double Column::missing_fraction() const {
  return size() == 0 ? 0.0 : static_cast<double>(missing_count()) / static_cast<double>(size());
}

TractFrame::TractFrame(std::vector<std::string> geoids) : geoids_(std::move(geoids)) {
  for (std::size_t i = 0; i < geoids_.size(); ++i) {
    if (!row_index_.emplace(geoids_[i], i).second) {
      throw Error(ErrorCode::DuplicateGeoid, geoids_[i]);
    }
  }
}

std::optional<std::size_t> TractFrame::row_of(std::string_view geoid) const {
  auto it = row_index_.find(geoid);
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

void TractFrame::set_geometry(std::vector<geo::MultiPolygon> geometry) {
  if (geometry.size() != rows()) {
    throw Error(ErrorCode::InvalidArgument, "geometry count differs from row count");
  }
  geometry_ = std::move(geometry);
}

bool TractFrame::has_column(std::string_view name) const { return index_.contains(name); }

const Column& TractFrame::column(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::MissingColumn, std::string(name));
  return columns_[it->second];
}

void TractFrame::add_column(Column column) {
  if (column.size() != rows()) {
    throw Error(ErrorCode::InvalidArgument,
                "column '" + column.name + "' length differs from row count");
  }
  if (index_.contains(column.name)) {
    throw Error(ErrorCode::InvalidArgument, "duplicate column name '" + column.name + "'");
  }
  index_.emplace(column.name, columns_.size());
  columns_.push_back(std::move(column));
}

void TractFrame::replace_column(Column column) {
  auto it = index_.find(column.name);
  if (it == index_.end()) {
    add_column(std::move(column));
    return;
  }
  if (column.size() != rows()) {
    throw Error(ErrorCode::InvalidArgument,
                "column '" + column.name + "' length differs from row count");
  }
  columns_[it->second] = std::move(column);
}

std::vector<double> TractFrame::complete_values(std::string_view name) const {
  const Column& c = column(name);
  if (c.is_categorical()) {
    throw Error(ErrorCode::InvalidArgument, "column '" + c.name + "' is categorical");
  }
  std::vector<double> out;
  out.reserve(c.numbers.size());
  for (std::size_t i = 0; i < c.numbers.size(); ++i) {
    if (!c.numbers[i]) {
      throw Error(ErrorCode::MissingValues, "column '" + c.name + "' missing at " + geoids_[i]);
    }
    out.push_back(*c.numbers[i]);
  }
  return out;
}

TractFrame TractFrame::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  for (std::size_t r : rows) ids.push_back(geoids_.at(r));
  TractFrame out(std::move(ids));
  if (has_geometry()) {
    std::vector<geo::MultiPolygon> g;
    for (std::size_t r : rows) g.push_back(geometry_[r]);
    out.set_geometry(std::move(g));
  }
  for (const auto& c : columns_) {
    Column sub{c.name, c.kind, c.source, {}, {}};
    for (std::size_t r : rows) {
      if (c.is_categorical()) {
        sub.labels.push_back(c.labels[r]);
      } else {
        sub.numbers.push_back(c.numbers[r]);
      }
    }
    out.add_column(std::move(sub));
  }
  return out;
}

}  // namespace vulnatlas
