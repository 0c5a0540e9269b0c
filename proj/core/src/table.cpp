#include "fairgraph/table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>

#include "fairgraph/errors.hpp"
#include "fairgraph/graph.hpp"

namespace fairgraph {

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open CSV file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t record_no = 1;

  auto end_field = [&] {
    record.push_back(field);
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(record));
    record.clear();
    ++record_no;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty()) {
          throw IngestError("CSV record " + std::to_string(record_no) +
                            ": quote in the middle of an unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        // swallow; the following \n (if any) ends the record
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw IngestError("CSV record " + std::to_string(record_no) +
                      ": unterminated quoted field");
  }
  // Final record without trailing newline.
  if (!field.empty() || field_was_quoted || !record.empty()) end_record();

  if (records.empty()) throw IngestError("CSV file is empty: " + path);
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != records[0].size()) {
      throw IngestError("CSV record " + std::to_string(r + 1) + " has " +
                        std::to_string(records[r].size()) + " fields, header has " +
                        std::to_string(records[0].size()));
    }
  }
  return records;
}

namespace {

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  // skip surrounding spaces
  while (begin < end && *begin == ' ') ++begin;
  while (end > begin && *(end - 1) == ' ') --end;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool cell_missing(const std::string& s) {
  if (s.empty()) return true;
  std::string t;
  for (char c : s)
    if (c != ' ') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return t == "na" || t == "nan" || t == "null";
}

int map_binary_cell(const std::string& cell, const std::map<std::string, int>& value_map,
                    const std::string& col, std::size_t row) {
  if (!value_map.empty()) {
    auto it = value_map.find(cell);
    if (it == value_map.end()) {
      throw IngestError("row " + std::to_string(row) + ", column '" + col +
                        "': value '" + cell + "' not covered by the value map");
    }
    if (it->second != 0 && it->second != 1) {
      throw IngestError("column '" + col + "': value map must target 0 or 1");
    }
    return it->second;
  }
  double v;
  if (!parse_double(cell, v) || (v != 0.0 && v != 1.0)) {
    throw IngestError("row " + std::to_string(row) + ", column '" + col +
                      "': expected 0/1 (or provide a value map), got '" + cell + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

AttributeTable load_table(const std::string& csv_path, const TableSchema& schema) {
  auto records = read_csv(csv_path);
  const auto& header = records[0];
  const std::size_t n_rows = records.size() - 1;
  if (n_rows == 0) throw IngestError("CSV has a header but no data rows: " + csv_path);

  auto col_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw IngestError("column '" + name + "' not found in " + csv_path);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t sens_col = col_of(schema.sensitive);
  const std::size_t label_col = col_of(schema.label);
  if (sens_col == label_col) {
    throw IngestError("sensitive and label columns must differ");
  }

  std::set<std::size_t> dropped;
  for (const auto& name : schema.drop) dropped.insert(col_of(name));
  if (dropped.count(sens_col) || dropped.count(label_col)) {
    throw IngestError("cannot drop the sensitive or label column");
  }

  // Pass 1: classify every retained column (numeric vs categorical) and
  // collect category levels.
  struct ColPlan {
    std::size_t raw;
    bool numeric;
    std::vector<std::string> levels;  // categorical only, sorted
  };
  std::vector<ColPlan> plans;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col || c == sens_col || dropped.count(c)) continue;
    ColPlan plan{c, true, {}};
    std::set<std::string> levels;
    for (std::size_t r = 1; r <= n_rows; ++r) {
      const std::string& cell = records[r][c];
      if (cell_missing(cell)) {
        throw IngestError("row " + std::to_string(r + 1) + ", column '" + header[c] +
                          "': missing value");
      }
      double v;
      if (!parse_double(cell, v)) plan.numeric = false;
      levels.insert(cell);
    }
    if (!plan.numeric) plan.levels.assign(levels.begin(), levels.end());
    plans.push_back(std::move(plan));
  }

  // Layout: sensitive column first, then the remaining columns in header
  // order (one-hot expanded in place).
  AttributeTable table;
  table.sensitive_name = schema.sensitive;
  table.label_name = schema.label;
  table.sensitive_idx = 0;
  table.column_names.push_back(schema.sensitive);
  for (const auto& plan : plans) {
    if (plan.numeric) {
      table.column_names.push_back(header[plan.raw]);
    } else {
      for (const auto& level : plan.levels) {
        table.column_names.push_back(header[plan.raw] + "=" + level);
      }
    }
  }

  table.attrs = Matrix(n_rows, table.column_names.size());
  table.labels.assign(n_rows, kUnlabeled);
  for (std::size_t r = 1; r <= n_rows; ++r) {
    const auto& rec = records[r];
    const std::size_t out_row = r - 1;

    table.attrs(out_row, 0) =
        map_binary_cell(rec[sens_col], schema.sensitive_map, schema.sensitive, r + 1);

    if (!rec[label_col].empty()) {
      table.labels[out_row] = static_cast<std::uint8_t>(
          map_binary_cell(rec[label_col], schema.label_map, schema.label, r + 1));
    }

    std::size_t out_col = 1;
    for (const auto& plan : plans) {
      const std::string& cell = rec[plan.raw];
      if (plan.numeric) {
        double v;
        parse_double(cell, v);  // validated in pass 1
        table.attrs(out_row, out_col++) = v;
      } else {
        auto it = std::lower_bound(plan.levels.begin(), plan.levels.end(), cell);
        table.attrs(out_row, out_col + static_cast<std::size_t>(it - plan.levels.begin())) = 1.0;
        out_col += plan.levels.size();
      }
    }
  }
  return table;
}

}  // namespace fairgraph
