#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epistate/counterfactual.hpp"
#include "epistate/estimation.hpp"
#include "epistate/mobility.hpp"
#include "epistate/policy.hpp"
#include "epistate/types.hpp"

namespace epistate::io {

using estimation::DeathPanel;

/// I/O or schema problem; carries a file/row locus in the message.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// `state,population` rows defining the country (order of appearance).
Country load_populations(const std::filesystem::path& path);

/// `date,state,cumulative_deaths` rows into a dense date-by-state panel.
/// Missing interior dates are forward-filled with a warning; small dips in
/// cumulative counts (< 5%) are raised to the running maximum with a warning,
/// larger ones are hard errors.
DeathPanel load_deaths(const std::filesystem::path& path, const Country& country,
                       std::vector<std::string>* warnings = nullptr);

/// `origin,destination,daily_fraction` rows into dense matrices; absent pairs
/// are zero. Explicit self-loops and row sums >= 1 are rejected.
mobility::MobilitySpec load_mobility(const std::filesystem::path& travel_path,
                                     const std::filesystem::path& commute_path,
                                     const Country& country);

/// `state,policy,start_date,end_date` rows into a merged calendar.
PolicyCalendar load_policies(const std::filesystem::path& path);

/// Line-based `key = value` parameter file over exactly the ModelParams field
/// names; unknown keys are hard errors. Missing keys keep their defaults.
ModelParams load_params(const std::filesystem::path& path);
void save_params(const ModelParams& params, const std::filesystem::path& path);

/// Scenario definitions, one per line:
///   name | kind | policies | scope | overrides
/// kind is STRICT or LOOSE; policies a comma-separated subset of
/// MASK,STAY_HOME,TRAVEL_BAN; scope is ALL or a state code; overrides are
/// `key=ISO-date` pairs (mask_start, mask_end, stay_home_start, ...).
struct ScenarioSpec {
    std::string name;
    cf::ScenarioKind kind;
    std::vector<PolicyKind> policies;
    std::string scope_state;  // empty = all states
    cf::ScenarioOverrides overrides;
};
std::vector<ScenarioSpec> load_scenarios(const std::filesystem::path& path);

void save_deaths(const DeathPanel& panel, const std::filesystem::path& path);

/// 64-bit FNV-1a of a file's bytes, as fixed-width hex.
std::string content_hash(const std::filesystem::path& path);
std::string content_hash_bytes(const std::string& bytes);

/// Download a deaths file from an HTTP endpoint serving either the CSV schema
/// above or a JSON array of {date,state,cumulative_deaths} objects. Writes
/// atomically (never leaves partial files) and returns the content hash of
/// the payload.
std::string fetch_deaths(const std::string& url, const std::filesystem::path& output_path);

/// Run configuration shared by the CLI subcommands.
struct RunConfig {
    std::filesystem::path deaths_path;
    std::filesystem::path travel_path;
    std::filesystem::path commute_path;
    std::filesystem::path policies_path;
    std::filesystem::path populations_path;
    std::filesystem::path params_path;    // optional
    std::filesystem::path scenario_path;  // optional
    std::filesystem::path output_dir = ".";
    std::uint64_t seed = 0;
    std::optional<Date> horizon;
    int threads = 0;  // 0 = hardware concurrency
};

/// Inputs loaded per the config, plus their content hashes for metadata.
struct LoadedInputs {
    Country country;
    ModelParams params;
    DeathPanel panel;
    mobility::MobilitySpec mobility;
    PolicyCalendar calendar;
    std::map<std::string, std::string> input_hashes;
    std::vector<std::string> warnings;
};
LoadedInputs load_inputs(const RunConfig& config);

/// Metadata sidecar (JSON) describing a run: parameters, input hashes, seed,
/// and any extra key/value entries.
void write_metadata(const std::filesystem::path& path, const ModelParams& params,
                    const std::map<std::string, std::string>& input_hashes, std::uint64_t seed,
                    const std::map<std::string, std::string>& extra = {});

/// Plot-ready long-format CSV: date,series,value.
void write_series_csv(const std::filesystem::path& path,
                      const std::vector<Date>& dates,
                      const std::vector<std::pair<std::string, VectorXd>>& columns);

void write_excess_csv(const std::filesystem::path& path,
                      const std::vector<cf::ExcessReportRow>& rows);

}  // namespace epistate::io
