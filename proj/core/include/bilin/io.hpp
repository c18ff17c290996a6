#pragma once

// File formats: version-tagged JSON model documents, delimited experiment
// batches, CSV/DaISy dataset ingestion, and plot-ready text emission.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bilin/markov.hpp"
#include "bilin/narx.hpp"
#include "bilin/system.hpp"

namespace bilin {

struct Dataset {
    std::optional<double> dt;
    Vector u;
    Vector y;
    std::string source;

    void validate() const;
};

enum class DatasetFormat { csv, daisy_whitespace };

// A deserialized model file: the time_domain tag picks the alternative,
// dt accompanies continuous models when known.
struct ModelFile {
    std::variant<DiscreteBilinearSystem, ContinuousBilinearSystem> system;
    std::optional<double> dt;
};

void save_model(const DiscreteBilinearSystem& sys, const std::string& path);
void save_model(const ContinuousBilinearSystem& sys, const std::string& path,
                std::optional<double> dt = std::nullopt);
ModelFile load_model(const std::string& path);

void save_narx(const NarxModel& model, const std::string& path);
NarxModel load_narx(const std::string& path);

// Delimited text, one experiment per input/output row pair; the header
// carries d, L, seed and the excitation parameters.
struct BatchMetadata {
    std::uint64_t seed = 0;
    std::string excitation = "gaussian";
    double mean = 0.0;
    double stddev = 1.0;
};
void save_batch(const ExperimentBatch& batch, const BatchMetadata& meta, const std::string& path);
std::pair<ExperimentBatch, BatchMetadata> load_batch(const std::string& path);

// csv: header with columns t,u,y (t optional). daisy_whitespace: numeric
// whitespace-delimited columns picked by 1-based indices.
Dataset ingest(const std::string& path, DatasetFormat format, int u_col = 1, int y_col = 2,
               std::optional<double> dt = std::nullopt);

// Two columns: index, sigma_i / sigma_1.
void write_spectrum(const std::string& path, const Vector& singular_values);

// Comma-delimited trace with one named column per series.
void write_trace(const std::string& path, const std::vector<std::string>& names,
                 const std::vector<Vector>& columns);

// Round-trip decimal formatting used by all text emitters.
std::string format_double(double v);

}  // namespace bilin
