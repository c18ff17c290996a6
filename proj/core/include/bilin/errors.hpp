#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bilin {

// Malformed or unreadable external data (files, datasets).
class data_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Numerical failures: rank deficiency, divergence, singular operators,
// failed training. The CLI maps these to a dedicated exit code.
class numerical_error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A state trajectory left the finite range during simulation.
class divergence_error : public numerical_error {
  public:
    divergence_error(const std::string& what, std::size_t step)
        : numerical_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t step_;
};

// A matrix that must be inverted is numerically singular.
class singular_matrix_error : public numerical_error {
  public:
    singular_matrix_error(const std::string& what, double condition)
        : numerical_error(what + " (condition estimate " + std::to_string(condition) + ")"),
          condition_(condition) {}
    double condition() const noexcept { return condition_; }

  private:
    double condition_;
};

// A least-squares system does not determine its unknowns.
class rank_deficiency_error : public numerical_error {
  public:
    rank_deficiency_error(const std::string& what, std::size_t rank, std::size_t required)
        : numerical_error(what + " (numerical rank " + std::to_string(rank) + ", need " +
                          std::to_string(required) + ")"),
          rank_(rank), required_(required) {}
    std::size_t rank() const noexcept { return rank_; }
    std::size_t required() const noexcept { return required_; }

  private:
    std::size_t rank_;
    std::size_t required_;
};

// Network training produced a non-finite loss.
class training_error : public numerical_error {
  public:
    training_error(const std::string& what, std::size_t epoch)
        : numerical_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

  private:
    std::size_t epoch_;
};

// A signal with zero variance or zero range where statistics are needed.
class degenerate_signal_error : public numerical_error {
  public:
    using numerical_error::numerical_error;
};

}  // namespace bilin
