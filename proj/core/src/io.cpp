#include "snakecpg/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "snakecpg/error.hpp"

namespace snakecpg::io {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(const std::string& path, std::vector<Column> columns)
    : path_(path), columns_(std::move(columns)), out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw PersistenceError("cannot open '" + path + "' for writing");
  if (columns_.empty()) throw PersistenceError(path + ": CSV schema has no columns");
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const auto& n = columns_[i].name;
    if (n.empty() || n.find_first_of(",\"\n") != std::string::npos) {
      throw PersistenceError(path + ": invalid column name '" + n + "'");
    }
    out_ << (i ? "," : "") << n;
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_.size()) {
    throw PersistenceError(path_ + ": row has " + std::to_string(cells.size()) +
                           " cells, schema has " + std::to_string(columns_.size()));
  }
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Column& c = columns_[i];
    const Cell& cell = cells[i];
    auto bad = [&](const char* why) {
      return PersistenceError(path_ + ": column '" + c.name + "' " + why);
    };
    std::string text;
    switch (c.type) {
      case ColumnType::real: {
        if (!std::holds_alternative<double>(cell)) throw bad("expects a real value");
        const double v = std::get<double>(cell);
        if (!std::isfinite(v) && !c.allow_nan) throw bad("received a non-finite value");
        text = format_real(v);
        break;
      }
      case ColumnType::integer:
        if (!std::holds_alternative<long long>(cell)) throw bad("expects an integer");
        text = std::to_string(std::get<long long>(cell));
        break;
      case ColumnType::boolean:
        if (!std::holds_alternative<bool>(cell)) throw bad("expects a boolean");
        text = std::get<bool>(cell) ? "1" : "0";
        break;
      case ColumnType::text:
        if (!std::holds_alternative<std::string>(cell)) throw bad("expects text");
        text = std::get<std::string>(cell);
        if (text.find_first_of(",\"\n") != std::string::npos) {
          throw bad("text must not contain commas, quotes or newlines");
        }
        break;
    }
    if (i) line += ',';
    line += text;
  }
  out_ << line << '\n';
  if (!out_) throw PersistenceError("write to '" + path_ + "' failed");
  ++rows_;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw PersistenceError("closing '" + path_ + "' failed");
}

JsonLinesWriter::JsonLinesWriter(const std::string& path, std::vector<std::string> required_keys,
                                 bool append)
    : path_(path),
      required_(std::move(required_keys)),
      out_(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc)) {
  if (!out_) throw PersistenceError("cannot open '" + path + "' for writing");
}

void JsonLinesWriter::write(const std::string& json_object) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_object);
  } catch (const nlohmann::json::exception& e) {
    throw PersistenceError(path_ + ": record is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw PersistenceError(path_ + ": record is not a JSON object");
  for (const auto& k : required_) {
    if (!j.contains(k)) throw PersistenceError(path_ + ": record lacks key '" + k + "'");
  }
  if (json_object.find('\n') != std::string::npos) {
    throw PersistenceError(path_ + ": record spans several lines");
  }
  out_ << json_object << '\n';
  out_.flush();
  if (!out_) throw PersistenceError("write to '" + path_ + "' failed");
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("cannot open '" + tmp + "' for writing");
    out << text;
    if (!out) throw PersistenceError("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw PersistenceError("cannot move '" + tmp + "' to '" + path + "'");
  }
}

}  // namespace snakecpg::io
