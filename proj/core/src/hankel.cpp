#include "bilin/hankel.hpp"

#include <limits>

namespace bilin {

namespace {

// (level, index within level) of a 0-based stacked row/column position.
std::pair<int, Eigen::Index> level_of(Eigen::Index pos) {
    int level = 1;
    Eigen::Index len = 1, start = 0;
    while (pos >= start + len) {
        start += len;
        len *= 2;
        ++level;
    }
    return {level, pos - start};
}

}  // namespace

WordIndex word_index(const std::string& word) {
    WordIndex idx;
    idx.block = static_cast<int>(word.size()) + 1;
    for (char c : word) {
        idx.offset <<= 1;
        if (c == 'N')
            idx.offset |= 1;
        else if (c != 'A')
            throw std::invalid_argument("word_index: letters must be 'A' or 'N'");
    }
    idx.flat = (Eigen::Index{1} << (idx.block - 1)) - 1 + idx.offset;
    return idx;
}

std::string hankel_row_word(Eigen::Index i) {
    auto [level, r] = level_of(i);
    // Observability stacking appends the new letter on the right with the A-block
    // first, so bit k of r (LSB first) is the k-th letter from the left.
    std::string word(level - 1, 'A');
    for (int k = 0; k < level - 1; ++k)
        if ((r >> k) & 1) word[k] = 'N';
    return word;
}

std::string hankel_col_word(Eigen::Index k) {
    auto [level, c] = level_of(k);
    // Reachability ordering prepends on the left, giving plain binary with the
    // leftmost letter as most significant bit.
    std::string word(level - 1, 'A');
    for (int b = 0; b < level - 1; ++b)
        if ((c >> (level - 2 - b)) & 1) word[b] = 'N';
    return word;
}

HankelSet build_hankel(const MarkovSequence& W, int p, int q) {
    if (p < 1 || q < 1) throw std::invalid_argument("build_hankel: levels must be >= 1");
    if (W.depth < p + q)
        throw std::invalid_argument("build_hankel: Markov depth " + std::to_string(W.depth) +
                                    " insufficient, need depth >= " + std::to_string(p + q));

    const Eigen::Index rows = markov_count(p);
    const Eigen::Index cols = markov_count(q);
    HankelSet hs;
    hs.p = p;
    hs.q = q;
    hs.depth_used = p + q;
    hs.H.resize(rows, cols);
    hs.SA.resize(rows, cols);
    hs.SN.resize(rows, cols);

    std::vector<std::string> row_words(rows), col_words(cols);
    for (Eigen::Index i = 0; i < rows; ++i) row_words[i] = hankel_row_word(i);
    for (Eigen::Index k = 0; k < cols; ++k) col_words[k] = hankel_col_word(k);

    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) {
            hs.H(i, k) = W.flat(word_index(row_words[i] + col_words[k]).flat);
            hs.SA(i, k) = W.flat(word_index(row_words[i] + "A" + col_words[k]).flat);
            hs.SN(i, k) = W.flat(word_index(row_words[i] + "N" + col_words[k]).flat);
        }
    }
    return hs;
}

Eigen::Index select_order(const Vector& singular_values, double tol) {
    if (singular_values.size() < 1)
        throw std::invalid_argument("select_order: empty spectrum");
    const double s1 = singular_values(0);
    if (!(s1 > 0.0))
        throw degenerate_signal_error(
            "select_order: all-zero singular spectrum (degenerate system)");

    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
        if (singular_values(i) / s1 > tol) r = i + 1;
    return std::max<Eigen::Index>(r, 1);
}

RealizationResult realize(const HankelSet& hs, Eigen::Index r) {
    if (hs.H.size() == 0) throw std::invalid_argument("realize: empty Hankel set");
    if (hs.SA.rows() != hs.H.rows() || hs.SA.cols() != hs.H.cols() ||
        hs.SN.rows() != hs.H.rows() || hs.SN.cols() != hs.H.cols())
        throw std::invalid_argument("realize: partitions must match H's shape");

    Eigen::BDCSVD<Matrix> svd(hs.H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();

    if (r < 1 || r > sv.size())
        throw std::invalid_argument("realize: order out of range");
    const double eps = std::numeric_limits<double>::epsilon();
    const double threshold = static_cast<double>(std::max(hs.H.rows(), hs.H.cols())) * eps * sv(0);
    if (!(sv(r - 1) > 0.0))
        throw numerical_error("realize: sigma_r = 0, degenerate truncation");
    if (sv(r - 1) <= threshold) {
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > threshold) ++rank;
        throw rank_deficiency_error("realize: requested order exceeds the numerical rank of H",
                                    static_cast<std::size_t>(rank), static_cast<std::size_t>(r));
    }

    Matrix Ur = svd.matrixU().leftCols(r);
    Matrix Vr = svd.matrixV().leftCols(r);
    Vector s_half = sv.head(r).cwiseSqrt();
    Vector s_ihalf = s_half.cwiseInverse();

    Matrix Ar = s_ihalf.asDiagonal() * (Ur.transpose() * hs.SA * Vr) * s_ihalf.asDiagonal();
    Matrix Nr = s_ihalf.asDiagonal() * (Ur.transpose() * hs.SN * Vr) * s_ihalf.asDiagonal();
    Vector Br = s_half.asDiagonal() * Vr.row(0).transpose();
    RowVector Cr = Ur.row(0) * s_half.asDiagonal();

    RealizationResult result{DiscreteBilinearSystem(std::move(Ar), std::move(Nr), std::move(Br),
                                                    std::move(Cr)),
                             sv, r, 0.0};
    return result;
}

RealizationResult identify_from_markov(const MarkovSequence& W, double tol,
                                       Eigen::Index order_override) {
    if (W.depth < 2) throw std::invalid_argument("identify_from_markov: depth must be >= 2");
    const int p = W.depth / 2;
    const int q = W.depth - p;
    HankelSet hs = build_hankel(W, p, q);

    Eigen::BDCSVD<Matrix> svd(hs.H);
    Eigen::Index r = order_override >= 1 ? order_override : select_order(svd.singularValues(), tol);

    RealizationResult result = realize(hs, r);
    result.tolerance_used = tol;
    return result;
}

}  // namespace bilin
