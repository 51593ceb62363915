#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace serreg {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyInputError : CsvError {
    using CsvError::CsvError;
};

// Columns s1..sd, y, optionally x1..xp; comma separator, header required.
struct DataTable {
    Eigen::MatrixXd sites;  // n x d raw coordinates
    Eigen::VectorXd y;
    Eigen::MatrixXd X;  // n x p, zero columns when no covariates
    int d = 0;
    int p = 0;
    long n() const { return sites.rows(); }
};

DataTable read_data_csv(const std::string& path);

void write_data_csv(const std::string& path, const Eigen::MatrixXd& sites, const Eigen::VectorXd& y,
                    const Eigen::MatrixXd& X);

// Generic table writer, one column name per matrix column, values with 17
// significant digits.
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const Eigen::MatrixXd& values);

std::string format_double(double v);

}  // namespace serreg
