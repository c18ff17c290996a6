#pragma once

// Bilinear Hankel assembly from a Markov sequence, singular-value order
// selection, and the SVD-based realization of the reduced quadruple.

#include <Eigen/Dense>

#include <string>

#include "bilin/system.hpp"

namespace bilin {

// H with its A-/N-prefixed column shifts at matching shape. Entry (i, k)
// is the Markov value of the concatenated word row(i)·col(k).
struct HankelSet {
    int p = 0;  // row levels
    int q = 0;  // column levels
    Matrix H;   // (2^p - 1) x (2^q - 1)
    Matrix SA;  // same shape, column words prefixed by A
    Matrix SN;  // same shape, column words prefixed by N
    int depth_used = 0;
};

struct RealizationResult {
    DiscreteBilinearSystem system;
    Vector singular_values;  // full spectrum of H, nonincreasing
    Eigen::Index order = 0;
    double tolerance_used = 0.0;
};

struct WordIndex {
    int block = 0;           // j = word length + 1
    Eigen::Index offset = 0; // binary value, MSB = leftmost letter, A=0 N=1
    Eigen::Index flat = 0;   // (2^(j-1) - 1) + offset
};

// Position of a word over {A, N} (e.g. "AN") in the flat Markov layout.
WordIndex word_index(const std::string& word);

// Word of the i-th Hankel row (0-based, observability stacking: appended letter
// is most significant) and the k-th column (reachability ordering: standard
// binary, MSB leftmost).
std::string hankel_row_word(Eigen::Index i);
std::string hankel_col_word(Eigen::Index k);

// Requires W.depth >= p + q (the shifted partitions consume words of
// length up to p + q - 1).
HankelSet build_hankel(const MarkovSequence& W, int p, int q);

// Largest r with sv(r-1)/sv(0) > tol (strict). Throws on an all-zero spectrum.
Eigen::Index select_order(const Vector& singular_values, double tol);

// SVD realization: truncate H = U S V^T to rank r and form
// A_r = S^-1/2 U^T SA V S^-1/2, N_r likewise from SN,
// B_r = first column of S^1/2 V^T, C_r = first row of U S^1/2.
RealizationResult realize(const HankelSet& hs, Eigen::Index r);

// build_hankel at p = floor(depth/2) + select_order + realize.
// A nonnegative order_override skips the singular-value selection.
RealizationResult identify_from_markov(const MarkovSequence& W, double tol,
                                       Eigen::Index order_override = -1);

constexpr double kDefaultHankelTol = 1e-12;

}  // namespace bilin
