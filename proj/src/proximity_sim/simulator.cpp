#include "mcms/proximity_sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace mcms::sim {

std::string_view to_string(SimErrc code) {
    switch (code) {
        case SimErrc::InvalidConfig: return "InvalidConfig";
        case SimErrc::UnknownApp: return "UnknownApp";
        case SimErrc::MalformedReport: return "MalformedReport";
    }
    return "Unknown";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::none: return "none";
        case Outcome::rejected: return "rejected";
        case Outcome::success: return "success";
        case Outcome::failed: return "failed";
    }
    return "none";
}

namespace {

constexpr double day_s = 86400.0;
constexpr double bucket_s = 60.0;

void require(bool ok, const std::string& what) {
    if (!ok) throw SimError(SimErrc::InvalidConfig, what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0; }
bool finite_pos(double v) { return std::isfinite(v) && v > 0; }
bool probability(double v) { return std::isfinite(v) && v >= 0 && v <= 1; }

// Counter-based randomness: every draw is a pure function of (seed, stream, a, b).
enum Stream : std::uint64_t { count_stream = 1, time_stream, dwell_stream, service_a, service_b, reject_stream, fail_stream };

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double uniform(std::uint64_t seed, Stream s, std::uint64_t a, std::uint64_t b) {
    const std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(s) ^ splitmix(a ^ splitmix(b))));
    return (static_cast<double>(h >> 11) + 0.5) * 0x1p-53;  // open interval (0, 1)
}

std::uint64_t poisson_quantile(double mean, double u) {
    if (mean <= 0) return 0;
    const double cap = mean + 40 * std::sqrt(mean) + 100;
    std::uint64_t k = 0;
    double logp = -mean;
    double cdf = std::exp(logp);
    while (cdf < u && static_cast<double>(k) < cap) {
        ++k;
        logp += std::log(mean) - std::log(static_cast<double>(k));
        cdf += std::exp(logp);
    }
    return k;
}

double lognormal(double mean, double sigma, double u1, double u2) {
    const double z = std::sqrt(-2 * std::log(u1)) * std::cos(2 * std::numbers::pi * u2);
    return std::exp(std::log(mean) - sigma * sigma / 2 + sigma * z);
}

struct Offer {
    bool rejected{};
    bool failed{};
    double occupancy{};
};

Offer draw_offer(const SimConfig& c, std::uint64_t a, std::uint64_t b, double now, double leave_time, bool can_reject) {
    const double service =
        lognormal(c.service_time_mean_s, c.service_time_sigma, uniform(c.seed, service_a, a, b), uniform(c.seed, service_b, a, b));
    Offer o;
    if (can_reject && uniform(c.seed, reject_stream, a, b) < c.p_reject) {
        o.rejected = true;
        o.occupancy = c.reject_occupancy_fraction * service;
        return o;
    }
    o.occupancy = service;
    const bool left = c.departure_aborts_transfer && leave_time < now + service;
    o.failed = left || uniform(c.seed, fail_stream, a, b) < c.p_fail_given_accept;
    return o;
}

struct Device {
    double enter{};
    double leave{};
    std::uint64_t key_a{};  // generation coordinates, stable under changes of λ
    std::uint64_t key_b{};
    bool in_range{false};
    bool seen{false};
    bool queued{false};
    bool offered{false};
    Outcome outcome{Outcome::none};
    double offer_start{-1};
    double offer_end{-1};
};

enum class EventType { enter, leave, scan, offer_start, offer_resolve };

struct Event {
    double time;
    std::uint64_t seq;
    EventType type;
    std::size_t id;
};

struct Later {
    bool operator()(const Event& a, const Event& b) const {
        return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
};

class EventQueue {
public:
    void push(double time, EventType type, std::size_t id = 0) { q_.push({time, seq_++, type, id}); }
    bool empty() const { return q_.empty(); }
    Event pop() {
        Event e = q_.top();
        q_.pop();
        return e;
    }

private:
    std::priority_queue<Event, std::vector<Event>, Later> q_;
    std::uint64_t seq_{0};
};

class OpenHours {
public:
    explicit OpenHours(const SimConfig& c) : open_s_(c.open_hours_per_day * 3600.0) {}
    bool is_open(double t) const { return std::fmod(t, day_s) < open_s_; }
    /// Open seconds in [0, t).
    double before(double t) const {
        const double days = std::floor(t / day_s);
        return days * open_s_ + std::min(t - days * day_s, open_s_);
    }
    double overlap(double a, double b) const { return b > a ? before(b) - before(a) : 0.0; }
    double open_s() const { return open_s_; }

private:
    double open_s_;
};

std::vector<Device> generate_arrivals(const SimConfig& c, const OpenHours& hours) {
    std::vector<Device> out;
    if (c.arrival_rate_per_s <= 0) return out;
    for (double day = 0; day < c.duration_s; day += day_s) {
        const double end = std::min(day + hours.open_s(), c.duration_s);
        for (double start = day; start < end; start += bucket_s) {
            const double len = std::min(bucket_s, end - start);
            const auto key = static_cast<std::uint64_t>(std::llround(start / bucket_s));
            const std::uint64_t n = poisson_quantile(c.arrival_rate_per_s * len, uniform(c.seed, count_stream, key, 0));
            for (std::uint64_t k = 0; k < n; ++k) {
                Device d;
                d.enter = start + uniform(c.seed, time_stream, key, k) * len;
                d.leave = d.enter - c.dwell_mean_s * std::log(uniform(c.seed, dwell_stream, key, k));
                d.key_a = key;
                d.key_b = k;
                out.push_back(d);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const Device& x, const Device& y) {
        if (x.enter != y.enter) return x.enter < y.enter;
        return std::tie(x.key_a, x.key_b) < std::tie(y.key_a, y.key_b);
    });
    return out;
}

class SlotGuard {
public:
    explicit SlotGuard(std::uint32_t slots) : slots_(slots) {}
    void acquire() {
        ++active_;
        if (active_ > slots_) throw std::logic_error("slot bound violated: " + std::to_string(active_) + " active");
        peak_ = std::max(peak_, active_);
    }
    void release() { --active_; }
    std::uint32_t peak() const { return peak_; }

private:
    std::uint32_t slots_;
    std::uint32_t active_{0};
    std::uint32_t peak_{0};
};

void tally(SimStats& s, std::vector<TimelineRow>* rows, double start, Outcome o) {
    ++s.attempts;
    TimelineRow* row = nullptr;
    if (rows) {
        const auto hour = static_cast<std::size_t>(start / 3600.0);
        if (hour < rows->size()) row = &(*rows)[hour];
    }
    if (row) ++row->attempts;
    switch (o) {
        case Outcome::rejected:
            ++s.rejections;
            if (row) ++row->rejections;
            break;
        case Outcome::success:
            ++s.successes;
            if (row) ++row->successes;
            break;
        case Outcome::failed:
            ++s.failures;
            if (row) ++row->failures;
            break;
        case Outcome::none: break;
    }
}

std::vector<TimelineRow> empty_timeline(const SimConfig& c) {
    std::vector<TimelineRow> rows(static_cast<std::size_t>(std::ceil(c.duration_s / 3600.0)));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].hour = static_cast<std::uint32_t>(i);
    return rows;
}

void export_trace(const std::vector<Device>& devices, SimTrace* trace) {
    if (!trace) return;
    trace->devices.clear();
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const Device& d = devices[i];
        trace->devices.push_back({i, d.enter, d.leave, d.offered, d.outcome, d.offer_start, d.offer_end});
    }
}

SimStats run_auto(const SimConfig& c, SimTrace* trace) {
    const OpenHours hours(c);
    std::vector<Device> devices = generate_arrivals(c, hours);
    std::vector<TimelineRow> rows = c.timeline ? empty_timeline(c) : std::vector<TimelineRow>{};
    std::vector<TimelineRow>* rows_ptr = c.timeline ? &rows : nullptr;

    EventQueue events;
    for (std::size_t i = 0; i < devices.size(); ++i) events.push(devices[i].enter, EventType::enter, i);
    events.push(0.0, EventType::scan);

    SimStats stats;
    SlotGuard guard(c.slots);
    std::set<std::size_t> in_range;  // ordered by arrival, so scans enqueue deterministically
    std::deque<std::size_t> fifo;
    std::uint32_t reserved = 0;  // started or about to start
    double last_t = 0;
    double area = 0;

    const auto dispatch = [&](double now) {
        while (reserved < c.slots && now < c.duration_s && hours.is_open(now) && !fifo.empty()) {
            const std::size_t id = fifo.front();
            fifo.pop_front();
            Device& d = devices[id];
            d.queued = false;
            if (!d.in_range || d.offered) continue;
            d.offered = true;
            ++reserved;
            events.push(now, EventType::offer_start, id);
        }
    };

    while (!events.empty()) {
        const Event e = events.pop();
        const double upto = std::min(e.time, c.duration_s);
        area += static_cast<double>(in_range.size()) * hours.overlap(last_t, upto);
        last_t = std::max(last_t, upto);
        Device* d = e.type == EventType::scan ? nullptr : &devices[e.id];
        switch (e.type) {
            case EventType::enter:
                d->in_range = true;
                in_range.insert(e.id);
                if (rows_ptr) {
                    const auto hour = static_cast<std::size_t>(d->enter / 3600.0);
                    if (hour < rows.size()) ++rows[hour].arrivals;
                }
                events.push(d->leave, EventType::leave, e.id);
                break;
            case EventType::leave:
                d->in_range = false;
                in_range.erase(e.id);
                break;
            case EventType::scan:
                for (const std::size_t id : in_range) {
                    Device& x = devices[id];
                    if (!x.seen) {
                        x.seen = true;
                        ++stats.unique_devices_seen;
                    }
                    if (!x.offered && !x.queued) {
                        x.queued = true;
                        fifo.push_back(id);
                    }
                }
                dispatch(e.time);
                if (e.time + c.scan_period_s < c.duration_s) events.push(e.time + c.scan_period_s, EventType::scan);
                break;
            case EventType::offer_start: {
                guard.acquire();
                const Offer o = draw_offer(c, d->key_a, d->key_b, e.time, d->leave, true);
                d->outcome = o.rejected ? Outcome::rejected : o.failed ? Outcome::failed : Outcome::success;
                d->offer_start = e.time;
                d->offer_end = e.time + o.occupancy;
                events.push(d->offer_end, EventType::offer_resolve, e.id);
                break;
            }
            case EventType::offer_resolve:
                guard.release();
                --reserved;
                tally(stats, rows_ptr, d->offer_start, d->outcome);
                dispatch(e.time);
                break;
        }
    }
    const double open_total = hours.before(c.duration_s);
    stats.mean_concurrent_in_range = open_total > 0 ? area / open_total : 0.0;
    stats.peak_active = guard.peak();
    if (c.timeline) stats.timeline = std::move(rows);
    export_trace(devices, trace);
    return stats;
}

} // namespace

void validate(const SimConfig& c) {
    require(finite_pos(c.duration_s), "duration_s must be positive");
    require(std::isfinite(c.open_hours_per_day) && c.open_hours_per_day > 0 && c.open_hours_per_day <= 24,
            "open_hours_per_day must be in (0, 24]");
    require(finite_nonneg(c.arrival_rate_per_s), "arrival_rate_per_s must be non-negative");
    require(finite_pos(c.dwell_mean_s), "dwell_mean_s must be positive");
    require(finite_pos(c.scan_period_s), "scan_period_s must be positive");
    require(c.slots >= 1, "slots must be at least 1");
    require(finite_pos(c.service_time_mean_s), "service_time_mean_s must be positive");
    require(finite_nonneg(c.service_time_sigma), "service_time_sigma must be non-negative");
    require(probability(c.p_reject), "p_reject must be in [0, 1]");
    require(probability(c.p_fail_given_accept), "p_fail_given_accept must be in [0, 1]");
    require(finite_nonneg(c.range_m), "range_m must be non-negative");
    require(std::isfinite(c.reject_occupancy_fraction) && c.reject_occupancy_fraction > 0 && c.reject_occupancy_fraction <= 1,
            "reject_occupancy_fraction must be in (0, 1]");
}

SimConfig exhibition_preset() {
    SimConfig c;
    c.seed = 1;
    c.duration_s = 2 * day_s;
    c.open_hours_per_day = 9;
    c.arrival_rate_per_s = 4.0;
    c.dwell_mean_s = 45;
    c.scan_period_s = 30;
    c.slots = 7;
    c.service_time_mean_s = 250;
    c.service_time_sigma = 0.5;
    c.p_reject = 0.556;
    c.p_fail_given_accept = 0.25;
    c.file_size_bytes = 300 * 1024;
    c.range_m = 100;
    c.reject_occupancy_fraction = 1.0;
    c.departure_aborts_transfer = false;
    return c;
}

SimStats run_sim(const SimConfig& config, Mode mode, const std::vector<ManualRequest>& requests, SimTrace* trace) {
    if (mode == Mode::manual_trace) return run_manual_trace(config, requests, nullptr, trace);
    validate(config);
    return run_auto(config, trace);
}

SimStats run_manual_trace(const SimConfig& c, const std::vector<ManualRequest>& requests, const std::set<std::string>* held,
                          SimTrace* trace) {
    validate(c);
    for (const auto& r : requests) {
        require(std::isfinite(r.time) && r.time >= 0 && r.time <= c.duration_s,
                "request time " + std::to_string(r.time) + " outside [0, duration_s]");
        if (held && !held->count(r.app_id)) throw SimError(SimErrc::UnknownApp, r.app_id);
    }
    std::vector<std::size_t> order(requests.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return requests[a].time < requests[b].time; });

    std::vector<Device> devices(requests.size());
    std::vector<TimelineRow> rows = c.timeline ? empty_timeline(c) : std::vector<TimelineRow>{};
    EventQueue events;
    for (std::size_t k = 0; k < order.size(); ++k) {
        Device& d = devices[k];
        d.enter = requests[order[k]].time;
        d.leave = std::numeric_limits<double>::infinity();
        d.key_a = std::numeric_limits<std::uint64_t>::max();  // disjoint from arrival buckets
        d.key_b = order[k];
        events.push(d.enter, EventType::enter, k);
    }

    SimStats stats;
    SlotGuard guard(c.slots);
    std::deque<std::size_t> fifo;
    std::uint32_t reserved = 0;
    const auto dispatch = [&](double now) {
        while (reserved < c.slots && !fifo.empty()) {
            const std::size_t id = fifo.front();
            fifo.pop_front();
            devices[id].offered = true;
            ++reserved;
            events.push(now, EventType::offer_start, id);
        }
    };
    while (!events.empty()) {
        const Event e = events.pop();
        Device& d = devices[e.id];
        switch (e.type) {
            case EventType::enter:
                ++stats.unique_devices_seen;
                if (c.timeline) {
                    const auto hour = static_cast<std::size_t>(d.enter / 3600.0);
                    if (hour < rows.size()) ++rows[hour].arrivals;
                }
                fifo.push_back(e.id);
                dispatch(e.time);
                break;
            case EventType::offer_start: {
                guard.acquire();
                const Offer o = draw_offer(c, d.key_a, d.key_b, e.time, d.leave, false);
                d.outcome = o.failed ? Outcome::failed : Outcome::success;
                d.offer_start = e.time;
                d.offer_end = e.time + o.occupancy;
                events.push(d.offer_end, EventType::offer_resolve, e.id);
                break;
            }
            case EventType::offer_resolve:
                guard.release();
                --reserved;
                d.leave = d.offer_end;
                tally(stats, c.timeline ? &rows : nullptr, d.offer_start, d.outcome);
                dispatch(e.time);
                break;
            default: break;
        }
    }
    stats.peak_active = guard.peak();
    if (c.timeline) stats.timeline = std::move(rows);
    export_trace(devices, trace);
    return stats;
}

} // namespace mcms::sim
