#include "serreg/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace serreg {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        size_t start = cell.find_first_not_of(' ');
        out.push_back(start == std::string::npos ? "" : cell.substr(start));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_cell(const std::string& cell, long row, const std::string& col) {
    try {
        size_t pos = 0;
        double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw CsvError("row " + std::to_string(row) + ": cannot parse value '" + cell +
                       "' in column " + col);
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DataTable read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError(path + " is empty");
    std::vector<std::string> header = split_line(line);

    int d = 0, p = 0;
    size_t col = 0;
    while (col < header.size() && header[col] == "s" + std::to_string(d + 1)) {
        ++d;
        ++col;
    }
    if (d == 0) throw CsvError("header must start with site columns s1..sd, got '" +
                               (header.empty() ? std::string() : header[0]) + "'");
    if (col >= header.size() || header[col] != "y")
        throw CsvError("expected column 'y' after s1..s" + std::to_string(d));
    ++col;
    while (col < header.size() && header[col] == "x" + std::to_string(p + 1)) {
        ++p;
        ++col;
    }
    if (col != header.size())
        throw CsvError("unexpected trailing column '" + header[col] + "'");

    std::vector<std::vector<double>> rows;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::vector<std::string> cells = split_line(line);
        if (static_cast<int>(cells.size()) != d + 1 + p)
            throw CsvError("row " + std::to_string(lineno) + ": expected " +
                           std::to_string(d + 1 + p) + " fields, got " +
                           std::to_string(cells.size()));
        std::vector<double> vals(d + 1 + p);
        for (int k = 0; k < d + 1 + p; ++k) vals[k] = parse_cell(cells[k], lineno, header[k]);
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw EmptyInputError(path + " has a header but no data rows");

    DataTable table;
    table.d = d;
    table.p = p;
    long n = static_cast<long>(rows.size());
    table.sites.resize(n, d);
    table.y.resize(n);
    table.X.resize(n, p);
    for (long i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) table.sites(i, k) = rows[i][k];
        table.y[i] = rows[i][d];
        for (int k = 0; k < p; ++k) table.X(i, k) = rows[i][d + 1 + k];
    }
    return table;
}

void write_data_csv(const std::string& path, const Eigen::MatrixXd& sites, const Eigen::VectorXd& y,
                    const Eigen::MatrixXd& X) {
    std::vector<std::string> header;
    Eigen::MatrixXd values(sites.rows(), sites.cols() + 1 + X.cols());
    for (long k = 0; k < sites.cols(); ++k) header.push_back("s" + std::to_string(k + 1));
    header.push_back("y");
    for (long k = 0; k < X.cols(); ++k) header.push_back("x" + std::to_string(k + 1));
    values.leftCols(sites.cols()) = sites;
    values.col(sites.cols()) = y;
    if (X.cols() > 0) values.rightCols(X.cols()) = X;
    write_table(path, header, values);
}

void write_table(const std::string& path, const std::vector<std::string>& header,
                 const Eigen::MatrixXd& values) {
    if (static_cast<long>(header.size()) != values.cols())
        throw CsvError("header size does not match column count");
    std::ofstream out(path);
    if (!out) throw CsvError("cannot write " + path);
    for (size_t k = 0; k < header.size(); ++k) {
        if (k) out << ',';
        out << header[k];
    }
    out << '\n';
    for (long i = 0; i < values.rows(); ++i) {
        for (long k = 0; k < values.cols(); ++k) {
            if (k) out << ',';
            out << format_double(values(i, k));
        }
        out << '\n';
    }
    if (!out) throw CsvError("write failure on " + path);
}

}  // namespace serreg
