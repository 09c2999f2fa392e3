#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shred/datamodel.hpp"
#include "shred/ensemble.hpp"
#include "shred/sensing.hpp"
#include "shred/synthgen.hpp"

namespace shred {

/// Raw "[section]" / "key = value" text. '#' starts a comment. Keys are
/// stored as "section.key".
class KeyValueFile {
public:
    static KeyValueFile parse(const std::string& text, const std::string& origin = "<config>");
    static KeyValueFile read(const std::filesystem::path& path);

    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return entries_; }
    [[nodiscard]] std::optional<std::string> get(const std::string& key) const;
    [[nodiscard]] int line_of(const std::string& key) const;
    [[nodiscard]] const std::string& origin() const noexcept { return origin_; }

private:
    std::string origin_;
    std::map<std::string, std::string> entries_;
    std::map<std::string, int> lines_;
};

struct DataSettings {
    double energy = 0.999;
    std::size_t common_rank = 0;  // 0: per-field rank from the energy criterion
    SplitRatios ratios{};
};

struct RunConfig {
    std::filesystem::path source;
    std::uint64_t seed = 0;
    std::filesystem::path out = "run";
    synthgen::SolverConfig solver = synthgen::default_config();
    std::vector<synthgen::Perturbation> perturbations;  // variant for the update study
    DataSettings data;
    std::string channel = "ext";
    ChannelSpec channels;
    EnsembleConfig ensemble;
};

/// Builds a RunConfig from defaults overridden by `file`. Unknown keys and
/// malformed values throw ConfigError naming the line. SHRED_SEED, when set
/// in the environment, overrides run.seed.
[[nodiscard]] RunConfig make_config(const KeyValueFile& file, bool honour_environment = true);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path, bool honour_environment = true);

/// Every key the schema accepts, as "section.key".
[[nodiscard]] std::vector<std::string> known_keys();

/// Re-serializes the resolved configuration (all keys, canonical order).
[[nodiscard]] std::string to_text(const RunConfig& config);

} // namespace shred
