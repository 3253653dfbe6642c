#include "qfc/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace qfc::io {

namespace {

double parse_double(std::string_view s, const char* context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{})
        throw ValidationError(std::string(context) + ": bad number '" + std::string(s) + "'");
    return v;
}

std::string format_complex(Complex z) {
    std::string out = format_double(z.real());
    out += (std::signbit(z.imag()) ? "-" : "+");
    out += format_double(std::abs(z.imag()));
    out += 'j';
    return out;
}

Complex parse_complex(std::string_view tok, const char* context) {
    if (tok.empty()) throw ValidationError(std::string(context) + ": empty token");
    if (tok.back() != 'j') return {parse_double(tok, context), 0.0};
    tok.remove_suffix(1);
    // Split before the sign of the imaginary part; skip signs in exponents
    // and a leading sign.
    for (std::size_t i = tok.size(); i-- > 1;) {
        const char c = tok[i];
        if ((c == '+' || c == '-') && tok[i - 1] != 'e' && tok[i - 1] != 'E') {
            const double re = parse_double(tok.substr(0, i), context);
            const double im_mag = parse_double(tok.substr(i + 1), context);
            return {re, c == '-' ? -im_mag : im_mag};
        }
    }
    throw ValidationError(std::string(context) + ": bad complex token");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open for reading: " + path);
    return f;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_record_csv(const std::string& path, const MeasurementRecord& rec) {
    auto f = open_out(path);
    f << kFileHeader << " kappa=" << format_double(rec.kappa) << " eta=" << format_double(rec.eta)
      << " dt=" << format_double(rec.dt) << "\n";
    f << "t,current\n";
    for (std::size_t i = 0; i < rec.currents.size(); ++i)
        f << format_double(rec.times[i]) << ',' << format_double(rec.currents[i]) << "\n";
}

MeasurementRecord read_record_csv(const std::string& path) {
    auto f = open_in(path);
    MeasurementRecord rec;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line);
            std::string tok;
            while (ss >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq);
                const double val = parse_double(tok.substr(eq + 1), "record header");
                if (key == "kappa") rec.kappa = val;
                else if (key == "eta") rec.eta = val;
                else if (key == "dt") rec.dt = val;
            }
            continue;
        }
        if (!header_seen) {
            if (line != "t,current")
                throw ValidationError("record CSV: expected header 't,current', got '" + line + "'");
            header_seen = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw ValidationError("record CSV: malformed row '" + line + "'");
        rec.times.push_back(parse_double(std::string_view(line).substr(0, comma), "record t"));
        rec.currents.push_back(
            parse_double(std::string_view(line).substr(comma + 1), "record current"));
    }
    if (!header_seen) throw ValidationError("record CSV: missing header");
    if (rec.dt <= 0 && rec.times.size() >= 2) rec.dt = rec.times[1] - rec.times[0];
    return rec;
}

void save_complex_matrix(const std::string& path, const ComplexMatrix& m) {
    auto f = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) f << ' ';
            f << format_complex(m(i, j));
        }
        f << "\n";
    }
}

ComplexMatrix load_complex_matrix(const std::string& path) {
    auto f = open_in(path);
    std::vector<std::vector<Complex>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::vector<Complex> row;
        std::string tok;
        while (ss >> tok) row.push_back(parse_complex(tok, "matrix file"));
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("matrix file: no data: " + path);
    const std::size_t n = rows[0].size();
    ComplexMatrix m(rows.size(), n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != n) throw ValidationError("matrix file: ragged rows");
        for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
    }
    return m;
}

const std::vector<double>& Table::col(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return data[i];
    throw ValidationError("table: no column '" + name + "'");
}

void write_table_csv(const std::string& path, const Table& table) {
    auto f = open_out(path);
    f << kFileHeader << "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        f << (i ? "," : "") << table.columns[i];
    f << "\n";
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.data.size(); ++c) {
            if (c) f << ',';
            const double v = table.data[c][r];
            if (!std::isnan(v)) f << format_double(v);
        }
        f << "\n";
    }
}

Table read_table_csv(const std::string& path) {
    auto f = open_in(path);
    Table table;
    std::string line;
    bool header_seen = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string cell;
        if (!header_seen) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            table.data.resize(table.columns.size());
            header_seen = true;
            continue;
        }
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= table.data.size()) throw ValidationError("table: too many cells");
            table.data[c++].push_back(
                cell.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : parse_double(cell, "table"));
        }
        // Trailing empty cells are dropped by getline; pad with NaN.
        for (; c < table.data.size(); ++c)
            table.data[c].push_back(std::numeric_limits<double>::quiet_NaN());
    }
    return table;
}

void write_summary(const std::string& path,
                   const std::vector<std::pair<std::string, std::string>>& kv) {
    auto f = open_out(path);
    f << kFileHeader << "\n";
    for (const auto& [k, v] : kv) f << k << '=' << v << "\n";
}

void write_weights(const std::string& path, const Eigen::VectorXd& w) {
    auto f = open_out(path);
    for (Eigen::Index i = 0; i < w.size(); ++i) f << format_double(w(i)) << "\n";
}

Eigen::VectorXd read_weights(const std::string& path) {
    auto f = open_in(path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        vals.push_back(parse_double(line, "weights"));
    }
    Eigen::VectorXd w(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) w(i) = vals[i];
    return w;
}

}  // namespace qfc::io
