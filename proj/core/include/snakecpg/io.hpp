#pragma once

// Artifact writers. Every row is checked against the declared schema before
// it reaches the file.

#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace snakecpg::io {

enum class ColumnType { real, integer, boolean, text };

struct Column {
  std::string name;
  ColumnType type = ColumnType::real;
  bool allow_nan = false;
};

using Cell = std::variant<double, long long, bool, std::string>;

class CsvWriter {
 public:
  /// Truncates `path` and writes the header. Throws PersistenceError.
  CsvWriter(const std::string& path, std::vector<Column> columns);

  /// Throws PersistenceError if the row does not match the schema.
  void row(const std::vector<Cell>& cells);
  std::size_t rows() const { return rows_; }
  void close();

 private:
  std::string path_;
  std::vector<Column> columns_;
  std::ofstream out_;
  std::size_t rows_ = 0;
};

/// Shortest round-trip decimal form; "nan"/"inf" for non-finite values.
std::string format_real(double v);

/// Appends JSON-lines records; each line must parse as a JSON object
/// carrying every required key.
class JsonLinesWriter {
 public:
  JsonLinesWriter(const std::string& path, std::vector<std::string> required_keys,
                  bool append = false);
  void write(const std::string& json_object);

 private:
  std::string path_;
  std::vector<std::string> required_;
  std::ofstream out_;
};

/// Writes `text` to `path` through a temporary file and rename.
void write_text(const std::string& path, const std::string& text);

}  // namespace snakecpg::io
