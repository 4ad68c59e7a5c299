#pragma once

#include <memory>
#include <vector>

#include "frailty.hpp"

namespace bifrail {

// One pair: monitoring times and observed causes, j_k = 0 meaning censored.
struct Observation {
    double x1 = 0.0, x2 = 0.0;
    int j1 = 0, j2 = 0;
};

struct Dataset {
    std::vector<Observation> observations;
    int l1 = 0, l2 = 0;

    bool common_monitoring() const;
    double min_monitoring() const;
    double max_monitoring() const;
};

// throws Error(invalid_argument) with a row reference on the first bad row
void validate_dataset(const Dataset& data, const ModelSpec& spec);

struct PairResult {
    double value = 0.0;
    bool clamped = false;  // landed in the [-1e-8, 0] band and was floored
};

// Likelihood contribution of one observation (monitoring density dropped):
//   j1>=1, j2>=1 -> F_{j1 j2}(x1,x2)
//   j1=0,  j2>=1 -> P[T1 > x1, T2 <= x2, J2 = j2]
//   j1>=1, j2=0  -> P[T1 <= x1, J1 = j1, T2 > x2]
//   j1=0,  j2=0  -> S(x1,x2)
// Values beyond -1e-8 negative raise an integrity error.
PairResult pair_likelihood(const ModelSpec& spec, const Observation& obs, double rel_tol = 1e-8);

struct LogLikResult {
    double value = 0.0;
    long underflow_warnings = 0;
    std::vector<int> underflow_indices;  // 0-based observations that were floored
};

LogLikResult log_likelihood(const ModelSpec& spec, const Dataset& data, double rel_tol = 1e-8);

// (L1+1) x (L2+1) multinomial cell probabilities at a monitoring pair,
// entry (j1,j2) = pair_likelihood of that case. Entries are renormalized when
// |raw_sum - 1| <= 1e-6; a larger deviation is an integrity error.
struct CellMatrix {
    int l1 = 0, l2 = 0;
    std::vector<double> p;  // row-major (l1+1) rows x (l2+1) cols
    double raw_sum = 0.0;

    double at(int j1, int j2) const { return p[j1 * (l2 + 1) + j2]; }
};

CellMatrix cell_probability_matrix(const ModelSpec& spec, double x1, double x2,
                                   double rel_tol = 1e-9);

// Cell probabilities as functions of a common monitoring time on [xmin, xmax]:
// quadrature-bound models get Chebyshev interpolants (built once per parameter
// vector), closed-form models evaluate directly. Used by the simulator and by
// log_likelihood on common-monitoring datasets.
class CellGrid {
public:
    CellGrid(const ModelSpec& spec, double xmin, double xmax, double rel_tol = 1e-9,
             int nodes = 25);
    ~CellGrid();
    CellGrid(CellGrid&&) noexcept;

    // renormalized matrix, row-major (l1+1) x (l2+1)
    void cell_matrix(double x, double* out) const;
    double cell(double x, int j1, int j2) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace bifrail
