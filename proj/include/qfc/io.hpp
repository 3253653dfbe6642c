// File formats: measurement-record CSV, generic run CSV with blank-for-
// undefined columns, plain-text complex matrices, and flat key=value
// summaries. All numeric output is locale-independent with 17 significant
// digits so reruns are byte-identical.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "qfc/sme.hpp"

namespace qfc::io {

inline constexpr const char* kFileHeader = "# qfc-lab v1";

std::string format_double(double v);

// Record CSV: the version comment carries kappa/eta/dt, then `t,current`.
void write_record_csv(const std::string& path, const MeasurementRecord& rec);
MeasurementRecord read_record_csv(const std::string& path);

// Plain-text complex matrix: one row per line, whitespace-separated
// `re+imj` tokens (e.g. `0.5-0.25j`).
void save_complex_matrix(const std::string& path, const ComplexMatrix& m);
ComplexMatrix load_complex_matrix(const std::string& path);

// Column-major numeric table; NaN cells are written as blanks and read back
// as NaN.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;

    std::size_t rows() const { return data.empty() ? 0 : data[0].size(); }
    const std::vector<double>& col(const std::string& name) const;
};

void write_table_csv(const std::string& path, const Table& table);
Table read_table_csv(const std::string& path);

void write_summary(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv);

void write_weights(const std::string& path, const Eigen::VectorXd& w);
Eigen::VectorXd read_weights(const std::string& path);

}  // namespace qfc::io
