#include "rootflow/io/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "rootflow/error.hpp"

namespace rootflow::io {
namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  // Trailing newline(s) leave empty lines at the end.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = line.find(',', start);
    cells.push_back(line.substr(start, end == std::string_view::npos ? end : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view cell, double& out) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return false;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc{} && res.ptr == cell.data() + cell.size() && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(len));
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed for " + path.string());
}

scm::Dataset parse_dataset_csv(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw FormatError("dataset CSV is empty");
  std::vector<std::string> names;
  for (auto cell : split_cells(lines[0])) names.emplace_back(trim(cell));
  const std::size_t d = names.size();
  for (std::size_t c = 0; c < d; ++c)
    if (names[c].empty()) throw ParseError(0, c, "empty column name in header, column " + std::to_string(c + 1));
  const std::size_t n = lines.size() - 1;
  if (n < 2)
    throw ValidationError("dataset CSV needs at least 2 data rows, found " + std::to_string(n));
  num::Matrix values(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    const auto cells = split_cells(lines[r + 1]);
    if (cells.size() != d)
      throw FormatError("row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                        " cells, header has " + std::to_string(d));
    for (std::size_t c = 0; c < d; ++c) {
      double v = 0.0;
      if (!parse_double(cells[c], v))
        throw ParseError(r + 1, c, "malformed cell '" + std::string(cells[c]) + "' at row " +
                                       std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      values(r, c) = v;
    }
  }
  auto ds = scm::make_dataset(std::move(values), std::move(names));
  ds.validate();
  return ds;
}

scm::Dataset load_dataset_csv(const std::filesystem::path& path) {
  return parse_dataset_csv(read_text_file(path));
}

std::string format_dataset_csv(const scm::Dataset& ds) {
  ds.validate();
  std::string out;
  for (std::size_t c = 0; c < ds.d(); ++c) {
    if (c) out += ',';
    out += ds.column_names[c];
  }
  out += '\n';
  for (std::size_t r = 0; r < ds.n(); ++r) {
    for (std::size_t c = 0; c < ds.d(); ++c) {
      if (c) out += ',';
      out += format_double(ds.values(r, c));
    }
    out += '\n';
  }
  return out;
}

void save_dataset_csv(const std::filesystem::path& path, const scm::Dataset& ds) {
  write_text_file(path, format_dataset_csv(ds));
}

scm::Dag parse_graph_csv(std::string_view text, const std::vector<std::string>& names) {
  auto lines = split_lines(text);
  if (lines.empty()) throw FormatError("graph CSV is empty");

  std::vector<std::string> header;
  {
    const auto first = split_cells(lines[0]);
    // A row of numbers is matrix data (possibly malformed); anything else names nodes.
    const bool numeric = std::all_of(first.begin(), first.end(), [](std::string_view c) {
      double v = 0.0;
      return parse_double(c, v);
    });
    if (!numeric) {
      for (auto c : first) header.emplace_back(trim(c));
      lines.erase(lines.begin());
    }
  }
  const std::size_t d = lines.size();
  if (!header.empty() && header.size() != d)
    throw FormatError("graph header names " + std::to_string(header.size()) + " nodes, matrix has " +
                      std::to_string(d) + " rows");
  if (!names.empty() && names.size() != d)
    throw FormatError("graph has " + std::to_string(d) + " nodes, dataset has " +
                      std::to_string(names.size()) + " columns");

  std::vector<std::vector<std::uint8_t>> adj(d, std::vector<std::uint8_t>(d, 0));
  const std::size_t row_offset = header.empty() ? 0 : 1;
  for (std::size_t i = 0; i < d; ++i) {
    const auto cells = split_cells(lines[i]);
    if (cells.size() != d)
      throw FormatError("graph row " + std::to_string(i + 1) + " has " +
                        std::to_string(cells.size()) + " entries, expected " + std::to_string(d));
    for (std::size_t j = 0; j < d; ++j) {
      const auto c = trim(cells[j]);
      if (c == "1") {
        adj[i][j] = 1;
      } else if (c != "0") {
        throw ParseError(i + row_offset, j, "graph entry '" + std::string(c) + "' at row " +
                                                std::to_string(i + 1) + ", column " +
                                                std::to_string(j + 1) + " is not 0/1");
      }
    }
  }

  if (!header.empty() && !names.empty()) {
    std::unordered_map<std::string, std::size_t> file_index;
    for (std::size_t k = 0; k < d; ++k)
      if (!file_index.emplace(header[k], k).second)
        throw FormatError("duplicate graph node name '" + header[k] + "'");
    std::vector<std::size_t> src(d);
    for (std::size_t k = 0; k < d; ++k) {
      const auto it = file_index.find(names[k]);
      if (it == file_index.end())
        throw FormatError("dataset column '" + names[k] + "' missing from graph header");
      src[k] = it->second;
    }
    std::vector<std::vector<std::uint8_t>> aligned(d, std::vector<std::uint8_t>(d, 0));
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) aligned[a][b] = adj[src[a]][src[b]];
    adj = std::move(aligned);
  }
  return scm::Dag(adj);
}

scm::Dag load_graph_csv(const std::filesystem::path& path, const std::vector<std::string>& names) {
  return parse_graph_csv(read_text_file(path), names);
}

std::string format_graph_csv(const scm::Dag& dag) {
  std::string out;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    for (std::size_t j = 0; j < dag.size(); ++j) {
      if (j) out += ',';
      out += dag.has_edge(i, j) ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

void save_graph_csv(const std::filesystem::path& path, const scm::Dag& dag) {
  write_text_file(path, format_graph_csv(dag));
}

eval::CausalOrder load_order_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  const auto lines = split_lines(text);
  if (lines.size() != 1) throw FormatError("order file must contain exactly one line");
  return eval::CausalOrder::parse_one_based(std::string(lines[0]));
}

void save_order_file(const std::filesystem::path& path, const eval::CausalOrder& order) {
  write_text_file(path, order.to_one_based_string() + "\n");
}

}  // namespace rootflow::io
