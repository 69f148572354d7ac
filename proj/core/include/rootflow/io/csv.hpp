#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rootflow/eval/metrics.hpp"
#include "rootflow/scm/dag.hpp"
#include "rootflow/scm/dataset.hpp"

namespace rootflow::io {

// Dataset CSV: a header row of column names, then rows of decimal floats.
// Errors: ParseError(row, column) for a bad cell (row 0 is the header),
// FormatError for ragged rows, ValidationError for fewer than 2 data rows.
scm::Dataset parse_dataset_csv(std::string_view text);
scm::Dataset load_dataset_csv(const std::filesystem::path& path);

// Values are written with 17 significant digits, so a reload is exact.
std::string format_dataset_csv(const scm::Dataset& ds);
void save_dataset_csv(const std::filesystem::path& path, const scm::Dataset& ds);

// Graph CSV: d lines of d comma-separated 0/1 entries, (i, j) = 1 for i -> j.
// An optional first line of variable names (any non-numeric cell marks it)
// lets the file list nodes in a different order than the dataset; with
// `names` given, the result is realigned to them. Without a header the file must already be in dataset
// order and `names` only fixes the expected size.
scm::Dag parse_graph_csv(std::string_view text, const std::vector<std::string>& names = {});
scm::Dag load_graph_csv(const std::filesystem::path& path,
                        const std::vector<std::string>& names = {});

std::string format_graph_csv(const scm::Dag& dag);
void save_graph_csv(const std::filesystem::path& path, const scm::Dag& dag);

// Order file: one line of comma-separated 1-based variable indices.
eval::CausalOrder load_order_file(const std::filesystem::path& path);
void save_order_file(const std::filesystem::path& path, const eval::CausalOrder& order);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace rootflow::io
