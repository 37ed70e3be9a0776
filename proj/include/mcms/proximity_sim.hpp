#pragma once

#include "mcms/error.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mcms::sim {

enum class SimErrc {
    InvalidConfig,
    UnknownApp,
    MalformedReport,
};

std::string_view to_string(SimErrc code);
using SimError = Error<SimErrc>;

struct SimConfig {
    std::uint64_t seed{1};
    double duration_s{86400};
    double open_hours_per_day{24};
    double arrival_rate_per_s{1};
    double dwell_mean_s{60};
    double scan_period_s{30};
    std::uint32_t slots{7};
    double service_time_mean_s{60};
    double service_time_sigma{0.5};         // lognormal shape
    double p_reject{0.5};
    double p_fail_given_accept{0.1};
    std::uint64_t file_size_bytes{0};       // reporting only
    double range_m{100};                    // annotation only; range is not geometric
    double reject_occupancy_fraction{0.1};  // share of a drawn service time a rejection holds its slot
    bool departure_aborts_transfer{true};   // a device leaving before completion fails its transfer
    bool timeline{false};                   // collect per-hour rows

    friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

/// Throws InvalidConfig.
void validate(const SimConfig& config);

/// Two-day, nine-hours-a-day exhibition calibration.
SimConfig exhibition_preset();

struct TimelineRow {
    std::uint32_t hour{};
    std::uint64_t arrivals{};
    std::uint64_t attempts{};
    std::uint64_t successes{};
    std::uint64_t failures{};
    std::uint64_t rejections{};

    friend bool operator==(const TimelineRow&, const TimelineRow&) = default;
};

struct SimStats {
    std::uint64_t attempts{};
    std::uint64_t successes{};
    std::uint64_t failures{};
    std::uint64_t rejections{};
    std::uint64_t unique_devices_seen{};
    double mean_concurrent_in_range{};  // time average over open hours
    std::uint32_t peak_active{};        // most offers/transfers in flight at once
    std::optional<std::vector<TimelineRow>> timeline;

    friend bool operator==(const SimStats&, const SimStats&) = default;
};

enum class Outcome { none, rejected, success, failed };
std::string_view to_string(Outcome o);

struct DeviceRecord {
    std::uint64_t device_id{};
    double enter_time{};
    double leave_time{};
    bool offered{false};
    Outcome outcome{Outcome::none};
    double offer_start{-1};
    double offer_end{-1};
};

/// Optional per-device log filled by a run.
struct SimTrace {
    std::vector<DeviceRecord> devices;
};

struct ManualRequest {
    double time{};
    std::string app_id;
};

enum class Mode { auto_broadcast, manual_trace };

/// Throws std::logic_error if the event loop ever exceeds the slot bound.
SimStats run_sim(const SimConfig& config, Mode mode = Mode::auto_broadcast, const std::vector<ManualRequest>& requests = {},
                 SimTrace* trace = nullptr);

/// User-initiated menu downloads: never rejected, FIFO when all slots are busy.
/// With `held`, every requested app must be in it (UnknownApp).
SimStats run_manual_trace(const SimConfig& config, const std::vector<ManualRequest>& requests,
                          const std::set<std::string>* held = nullptr, SimTrace* trace = nullptr);

struct SimRun {
    std::uint64_t seed{};
    SimStats stats;

    friend bool operator==(const SimRun&, const SimRun&) = default;
};

enum class ReportFormat { json, csv };

inline constexpr std::string_view csv_header = "seed,attempts,successes,failures,rejections,unique_devices,mean_in_range";

/// Stable field order; doubles use the shortest round-tripping form.
std::string emit_report(const std::vector<SimRun>& runs, ReportFormat format);
/// Inverse of emit_report. CSV carries only the header columns. Throws MalformedReport.
std::vector<SimRun> parse_report(std::string_view text, ReportFormat format);

/// Scenario JSON: SimConfig field names, all optional, defaulting to the exhibition preset. Throws InvalidConfig.
SimConfig parse_scenario(std::string_view json);
std::string scenario_to_json(const SimConfig& config);

/// Runs seeds config.seed .. config.seed + count - 1 on up to `threads` workers; result in seed order.
std::vector<SimRun> run_sweep(const SimConfig& config, std::uint64_t count, unsigned threads = 1);

} // namespace mcms::sim
