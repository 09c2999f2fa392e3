#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "shred/compression.hpp"
#include "shred/config.hpp"
#include "shred/datamodel.hpp"
#include "shred/ensemble.hpp"
#include "shred/metrics.hpp"
#include "shred/sensing.hpp"

namespace shred {

/// Everything derived deterministically from a dataset and a config:
/// scaling, split, per-field bases, reduced targets, sensor channels.
struct Prepared {
    FullState state;   // physical units
    MinMaxScaler scaler;
    FullState scaled;
    SplitIndices split;
    std::vector<SvdBasis> bases;  // truncated
    StackedReduced reduced;
    std::vector<Channel> channels;
    Grid grid;

    [[nodiscard]] const Channel& channel(const std::string& label) const;
    [[nodiscard]] const Eigen::MatrixXd& sensed() const { return scaled.field("T").data(); }
};

[[nodiscard]] Prepared prepare(FullState state, const RunConfig& config);

struct Evaluation {
    std::string channel;
    std::vector<std::size_t> columns;  // evaluated snapshot columns
    EnsembleResult reduced;            // on `columns`
    Eigen::MatrixXd reduced_truth;     // projected truth on `columns`
    std::vector<FieldEstimate> fields; // physical, on `columns`
    std::vector<FieldError> errors;
};

/// Ensemble prediction on the test split, per-field errors in physical units.
[[nodiscard]] Evaluation evaluate(const Prepared& prep, const std::vector<TrainedMember>& members,
                                  const std::string& channel);
/// The same report with the projected truth in place of the network: the
/// truncation floor.
[[nodiscard]] Evaluation evaluate_oracle(const Prepared& prep, const std::string& channel = "oracle");

/// Coverage of the projected truth by mean +- k std over the first
/// `modes` modes of every field.
[[nodiscard]] double reduced_coverage(const Evaluation& eval, const StackedReduced& layout, std::size_t modes,
                                      double k);

struct UpdateStudy {
    std::string trained_on;
    std::string monitored;
    std::vector<LocationTrace> traces;
    [[nodiscard]] double closer() const { return closer_fraction(traces); }
};

/// Feeds dataset-B temperature measurements (scaled with A's scaler) into the
/// A-trained ensemble and compares temperature traces at the `monitored`
/// channel against dataset A (baseline) and B (truth).
[[nodiscard]] UpdateStudy update_study(const Prepared& a, const FullState& b, const std::vector<TrainedMember>& members,
                                       const std::string& trained_on, const Channel& monitored, double band = 0.0);

// Artifact writers shared by the command-line tool and the tests.
void write_member_artifacts(const std::vector<TrainedMember>& members, const RunConfig& config,
                            const std::filesystem::path& dir);
[[nodiscard]] std::vector<TrainedMember> load_members(const std::filesystem::path& dir);
void write_evaluation(const Evaluation& eval, const Prepared& prep, const std::filesystem::path& dir);
void write_split_csv(const SplitIndices& split, const std::filesystem::path& path);

} // namespace shred
