#include "mcms/proximity_sim.hpp"

#include "json.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <charconv>
#include <sstream>
#include <thread>

namespace mcms::sim {

using ojson = nlohmann::ordered_json;

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

[[noreturn]] void malformed(const std::string& what) { throw SimError(SimErrc::MalformedReport, what); }

template <typename T>
T parse_number(std::string_view field, const char* name) {
    T v{};
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size()) malformed(std::string("bad ") + name);
    return v;
}

double ratio(std::uint64_t a, std::uint64_t b) { return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0; }

ojson run_json(const SimRun& r) {
    const SimStats& s = r.stats;
    ojson j = {{"seed", r.seed},
               {"attempts", s.attempts},
               {"successes", s.successes},
               {"failures", s.failures},
               {"rejections", s.rejections},
               {"unique_devices", s.unique_devices_seen},
               {"mean_in_range", s.mean_concurrent_in_range},
               {"peak_active", s.peak_active}};
    if (s.timeline) {
        ojson rows = ojson::array();
        for (const auto& t : *s.timeline) {
            rows.push_back({{"hour", t.hour},
                            {"arrivals", t.arrivals},
                            {"attempts", t.attempts},
                            {"successes", t.successes},
                            {"failures", t.failures},
                            {"rejections", t.rejections}});
        }
        j["timeline"] = rows;
    }
    return j;
}

ojson summary_json(const std::vector<SimRun>& runs) {
    double attempts = 0, rej = 0, succ = 0, fail = 0, in_range = 0;
    for (const auto& r : runs) {
        attempts += static_cast<double>(r.stats.attempts);
        rej += ratio(r.stats.rejections, r.stats.attempts);
        succ += ratio(r.stats.successes, r.stats.attempts);
        fail += ratio(r.stats.failures, r.stats.attempts);
        in_range += r.stats.mean_concurrent_in_range;
    }
    const double n = runs.empty() ? 1.0 : static_cast<double>(runs.size());
    return {{"runs", runs.size()},
            {"mean_attempts", attempts / n},
            {"mean_rejection_fraction", rej / n},
            {"mean_success_fraction", succ / n},
            {"mean_failure_fraction", fail / n},
            {"mean_in_range", in_range / n}};
}

template <typename T>
T field(const ojson& j, const char* key) {
    if (!j.contains(key)) malformed(std::string("missing ") + key);
    try {
        return j.at(key).get<T>();
    } catch (const ojson::exception& e) {
        malformed(std::string(key) + ": " + e.what());
    }
}

} // namespace

std::string emit_report(const std::vector<SimRun>& runs, ReportFormat format) {
    if (format == ReportFormat::csv) {
        std::string out(csv_header);
        out += '\n';
        for (const auto& r : runs) {
            const SimStats& s = r.stats;
            out += std::to_string(r.seed) + ',' + std::to_string(s.attempts) + ',' + std::to_string(s.successes) + ',' +
                   std::to_string(s.failures) + ',' + std::to_string(s.rejections) + ',' +
                   std::to_string(s.unique_devices_seen) + ',' + shortest(s.mean_concurrent_in_range) + '\n';
        }
        return out;
    }
    ojson arr = ojson::array();
    for (const auto& r : runs) arr.push_back(run_json(r));
    return ojson{{"runs", arr}, {"summary", summary_json(runs)}}.dump(2) + "\n";
}

std::vector<SimRun> parse_report(std::string_view text, ReportFormat format) {
    std::vector<SimRun> out;
    if (format == ReportFormat::csv) {
        std::istringstream in{std::string(text)};
        std::string line;
        if (!std::getline(in, line) || line != csv_header) malformed("csv header");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::vector<std::string_view> cols;
            std::string_view rest = line;
            for (;;) {
                const auto comma = rest.find(',');
                cols.push_back(rest.substr(0, comma));
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
            if (cols.size() != 7) malformed("expected 7 columns, got " + std::to_string(cols.size()));
            SimRun r;
            r.seed = parse_number<std::uint64_t>(cols[0], "seed");
            r.stats.attempts = parse_number<std::uint64_t>(cols[1], "attempts");
            r.stats.successes = parse_number<std::uint64_t>(cols[2], "successes");
            r.stats.failures = parse_number<std::uint64_t>(cols[3], "failures");
            r.stats.rejections = parse_number<std::uint64_t>(cols[4], "rejections");
            r.stats.unique_devices_seen = parse_number<std::uint64_t>(cols[5], "unique_devices");
            r.stats.mean_concurrent_in_range = parse_number<double>(cols[6], "mean_in_range");
            out.push_back(r);
        }
        return out;
    }
    const ojson j = ojson::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("runs") || !j["runs"].is_array()) malformed("expected {runs: [...]}");
    for (const auto& e : j["runs"]) {
        SimRun r;
        r.seed = field<std::uint64_t>(e, "seed");
        r.stats.attempts = field<std::uint64_t>(e, "attempts");
        r.stats.successes = field<std::uint64_t>(e, "successes");
        r.stats.failures = field<std::uint64_t>(e, "failures");
        r.stats.rejections = field<std::uint64_t>(e, "rejections");
        r.stats.unique_devices_seen = field<std::uint64_t>(e, "unique_devices");
        r.stats.mean_concurrent_in_range = field<double>(e, "mean_in_range");
        r.stats.peak_active = field<std::uint32_t>(e, "peak_active");
        if (e.contains("timeline")) {
            std::vector<TimelineRow> rows;
            for (const auto& t : e["timeline"]) {
                rows.push_back({field<std::uint32_t>(t, "hour"), field<std::uint64_t>(t, "arrivals"),
                                field<std::uint64_t>(t, "attempts"), field<std::uint64_t>(t, "successes"),
                                field<std::uint64_t>(t, "failures"), field<std::uint64_t>(t, "rejections")});
            }
            r.stats.timeline = std::move(rows);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::string scenario_to_json(const SimConfig& c) {
    const ojson j = {{"seed", c.seed},
                     {"duration_s", c.duration_s},
                     {"open_hours_per_day", c.open_hours_per_day},
                     {"arrival_rate_per_s", c.arrival_rate_per_s},
                     {"dwell_mean_s", c.dwell_mean_s},
                     {"scan_period_s", c.scan_period_s},
                     {"slots", c.slots},
                     {"service_time_mean_s", c.service_time_mean_s},
                     {"service_time_sigma", c.service_time_sigma},
                     {"p_reject", c.p_reject},
                     {"p_fail_given_accept", c.p_fail_given_accept},
                     {"file_size_bytes", c.file_size_bytes},
                     {"range_m", c.range_m},
                     {"reject_occupancy_fraction", c.reject_occupancy_fraction},
                     {"departure_aborts_transfer", c.departure_aborts_transfer},
                     {"timeline", c.timeline}};
    return j.dump(2) + "\n";
}

SimConfig parse_scenario(std::string_view text) {
    const ojson j = ojson::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SimError(SimErrc::InvalidConfig, "scenario is not a JSON object");
    SimConfig c = exhibition_preset();
    const auto num = [&](const std::string& k, const ojson& v) {
        if (!v.is_number()) throw SimError(SimErrc::InvalidConfig, k + " must be a number");
        return v.get<double>();
    };
    const auto whole = [&](const std::string& k, const ojson& v) {
        if (!v.is_number_unsigned()) throw SimError(SimErrc::InvalidConfig, k + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    };
    const auto flag = [&](const std::string& k, const ojson& v) {
        if (!v.is_boolean()) throw SimError(SimErrc::InvalidConfig, k + " must be a boolean");
        return v.get<bool>();
    };
    for (const auto& [k, v] : j.items()) {
        if (k == "seed") c.seed = whole(k, v);
        else if (k == "duration_s") c.duration_s = num(k, v);
        else if (k == "open_hours_per_day") c.open_hours_per_day = num(k, v);
        else if (k == "arrival_rate_per_s") c.arrival_rate_per_s = num(k, v);
        else if (k == "dwell_mean_s") c.dwell_mean_s = num(k, v);
        else if (k == "scan_period_s") c.scan_period_s = num(k, v);
        else if (k == "slots") {
            const auto s = whole(k, v);
            if (s > 1024) throw SimError(SimErrc::InvalidConfig, "slots too large");
            c.slots = static_cast<std::uint32_t>(s);
        }
        else if (k == "service_time_mean_s") c.service_time_mean_s = num(k, v);
        else if (k == "service_time_sigma") c.service_time_sigma = num(k, v);
        else if (k == "p_reject") c.p_reject = num(k, v);
        else if (k == "p_fail_given_accept") c.p_fail_given_accept = num(k, v);
        else if (k == "file_size_bytes") c.file_size_bytes = whole(k, v);
        else if (k == "range_m") c.range_m = num(k, v);
        else if (k == "reject_occupancy_fraction") c.reject_occupancy_fraction = num(k, v);
        else if (k == "departure_aborts_transfer") c.departure_aborts_transfer = flag(k, v);
        else if (k == "timeline") c.timeline = flag(k, v);
        else throw SimError(SimErrc::InvalidConfig, "unknown scenario field " + k);
    }
    validate(c);
    return c;
}

std::vector<SimRun> run_sweep(const SimConfig& config, std::uint64_t count, unsigned threads) {
    validate(config);
    std::vector<SimRun> out(count);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (std::uint64_t i = next++; i < count; i = next++) {
            try {
                SimConfig c = config;
                c.seed = config.seed + i;
                out[i] = {c.seed, run_sim(c)};
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::uint64_t>(count, 1))));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

} // namespace mcms::sim
