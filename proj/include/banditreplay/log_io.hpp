#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "banditreplay/replay.hpp"
#include "banditreplay/types.hpp"
#include "banditreplay/world.hpp"

namespace banditreplay {

// Event logs are line-oriented text so benchmark files stay inspectable:
//
//   banditlog 1 d=<dim> logger=<kind> seed=<seed> events=<count|->
//   <t> <context|-> <arm,arm,...> <chosen> <propensity> <payoff>
//
// One event per line, fields space-separated, context features and arm ids
// comma-separated. Floats are serialized with shortest round-trip precision.
// Propensity is stored per event rather than inferred from the candidate
// count, so non-uniform logs need no format change.

inline constexpr int kLogFormatVersion = 1;
inline constexpr std::string_view kLogMagic = "banditlog";

struct LogHeader {
    int version = kLogFormatVersion;
    int dim = 0;
    std::string logger_kind = "uniform";
    std::uint64_t seed = 0;
    std::optional<std::int64_t> event_count;  // absent for open streams
};

class LogParseError : public std::runtime_error {
public:
    LogParseError(std::int64_t line, const std::string& what)
        : std::runtime_error("log parse error at line " + std::to_string(line) + ": " + what),
          line_number(line) {}

    std::int64_t line_number;
};

namespace logfmt {

inline std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("double serialization failed");
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view s, std::int64_t line) {
    double v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw LogParseError(line, "bad float '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s, std::int64_t line) {
    std::int64_t v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw LogParseError(line, "bad integer '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find(sep, start);
        if (end == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

inline std::string header_line(const LogHeader& h) {
    std::ostringstream os;
    os << kLogMagic << ' ' << h.version << " d=" << h.dim << " logger=" << h.logger_kind
       << " seed=" << h.seed << " events=";
    if (h.event_count) os << *h.event_count;
    else os << '-';
    return os.str();
}

inline LogHeader parse_header(std::string_view line) {
    auto fields = split(line, ' ');
    if (fields.size() != 6 || fields[0] != kLogMagic)
        throw LogParseError(1, "not a banditlog header");
    LogHeader h;
    h.version = static_cast<int>(parse_int(fields[1], 1));
    if (h.version != kLogFormatVersion)
        throw LogParseError(1, "unsupported format version " + std::to_string(h.version));
    auto keyed = [&](std::string_view field, std::string_view key) -> std::string_view {
        if (field.substr(0, key.size()) != key)
            throw LogParseError(1, "expected '" + std::string(key) + "' field");
        return field.substr(key.size());
    };
    h.dim = static_cast<int>(parse_int(keyed(fields[2], "d="), 1));
    if (h.dim < 0) throw LogParseError(1, "negative dimension");
    h.logger_kind = std::string(keyed(fields[3], "logger="));
    h.seed = static_cast<std::uint64_t>(parse_int(keyed(fields[4], "seed="), 1));
    auto count = keyed(fields[5], "events=");
    if (count != "-") h.event_count = parse_int(count, 1);
    return h;
}

inline std::string event_line(std::int64_t t, const Event& e) {
    std::string line = std::to_string(t);
    line += ' ';
    if (e.context.dim() == 0) {
        line += '-';
    } else {
        for (std::size_t i = 0; i < e.context.dim(); ++i) {
            if (i) line += ',';
            line += format_double(e.context.features[i]);
        }
    }
    line += ' ';
    for (std::size_t i = 0; i < e.arms.size(); ++i) {
        if (i) line += ',';
        line += std::to_string(e.arms[i]);
    }
    line += ' ';
    line += std::to_string(e.chosen);
    line += ' ';
    line += format_double(e.propensity);
    line += ' ';
    line += format_double(e.payoff);
    return line;
}

inline Event parse_event(std::string_view line, std::int64_t line_number, int dim) {
    auto fields = split(line, ' ');
    if (fields.size() != 6) throw LogParseError(line_number, "expected 6 fields");
    Event e;
    if (fields[1] != "-") {
        for (auto part : split(fields[1], ','))
            e.context.features.push_back(parse_double(part, line_number));
    }
    if (static_cast<int>(e.context.dim()) != dim)
        throw LogParseError(line_number, "context dimension does not match header");
    for (auto part : split(fields[2], ','))
        e.arms.push_back(static_cast<ArmId>(parse_int(part, line_number)));
    e.chosen = static_cast<ArmId>(parse_int(fields[3], line_number));
    e.propensity = parse_double(fields[4], line_number);
    e.payoff = parse_double(fields[5], line_number);
    try {
        e.validate();
    } catch (const std::invalid_argument& ex) {
        throw LogParseError(line_number, ex.what());
    }
    return e;
}

}  // namespace logfmt

// Lazy single-pass reader; memory use is independent of the log length.
// Malformed lines surface as LogParseError naming the line; events before
// the bad line have already been yielded.
class EventReader : public EventStream {
public:
    explicit EventReader(const std::string& path) : in_(path) {
        if (!in_) throw std::runtime_error("cannot open log file: " + path);
        std::string line;
        if (!std::getline(in_, line)) throw LogParseError(1, "empty file, header expected");
        header_ = logfmt::parse_header(line);
        line_number_ = 1;
    }

    const LogHeader& header() const { return header_; }

    // True once any streamed event carried a non-uniform propensity.
    bool saw_nonuniform() const { return saw_nonuniform_; }

    std::optional<Event> next() override {
        if (!std::getline(in_, line_buf_)) return std::nullopt;
        ++line_number_;
        if (line_buf_.empty()) throw LogParseError(line_number_, "blank line");
        Event e = logfmt::parse_event(line_buf_, line_number_, header_.dim);
        if (!e.has_uniform_propensity()) saw_nonuniform_ = true;
        return e;
    }

private:
    std::ifstream in_;
    LogHeader header_;
    std::string line_buf_;
    std::int64_t line_number_ = 0;
    bool saw_nonuniform_ = false;
};

inline std::int64_t write_events(const std::string& path, const LogHeader& header,
                                 EventStream& events) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open log file for writing: " + path);
    out << logfmt::header_line(header) << '\n';
    std::int64_t count = 0;
    while (std::optional<Event> e = events.next()) {
        e->validate();
        if (static_cast<int>(e->context.dim()) != header.dim)
            throw std::invalid_argument("write_events: event dimension does not match header");
        out << logfmt::event_line(count, *e) << '\n';
        ++count;
    }
    out.flush();
    if (!out) throw std::runtime_error("I/O failure writing log file: " + path);
    return count;
}

inline std::int64_t write_events(const std::string& path, const LogHeader& header,
                                 const std::vector<Event>& events) {
    VectorStream stream(events);
    return write_events(path, header, stream);
}

inline std::vector<Event> read_all_events(const std::string& path, LogHeader* header_out = nullptr) {
    EventReader reader(path);
    if (header_out) *header_out = reader.header();
    std::vector<Event> events;
    if (reader.header().event_count) events.reserve(static_cast<std::size_t>(*reader.header().event_count));
    while (std::optional<Event> e = reader.next()) events.push_back(std::move(*e));
    return events;
}

// Declarative world configuration (JSON):
//
//   {
//     "d": 2,
//     "arms": [ { "from": 0, "arms": [0, 1, 2] } ],
//     "contexts": { "kind": "finite",
//                   "items": [ { "prob": 0.5, "x": [0.1, 0.2] }, ... ] }
//                | { "kind": "cube" },
//     "payoff": { "kind": "table",  "means":   { "0": [m_per_context...], ... } }
//             | { "kind": "linear", "weights": { "0": [w...], ... } },
//     "logger": { "kind": "uniform" } | { "kind": "explicit", "probs": [...] },
//     "seed": 1
//   }
//
// "contexts" may be omitted when d = 0 (one empty context). "logger"
// defaults to uniform and "seed" to 0.
struct WorldSpec {
    WorldModel world;
    LoggingPolicy logger;
    std::uint64_t seed = 0;
};

inline WorldSpec parse_world_spec(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("world config: expected JSON object");
    const int d = j.at("d").get<int>();

    std::vector<WorldModel::ScheduleEntry> schedule;
    for (const auto& entry : j.at("arms")) {
        WorldModel::ScheduleEntry e;
        e.from_trial = entry.value("from", std::int64_t{0});
        e.arms = entry.at("arms").get<std::vector<ArmId>>();
        schedule.push_back(std::move(e));
    }
    if (schedule.empty()) throw std::invalid_argument("world config: no arm schedule entries");

    const auto& payoff = j.at("payoff");
    const std::string payoff_kind = payoff.at("kind").get<std::string>();

    WorldModel world;
    if (payoff_kind == "linear") {
        std::map<ArmId, std::vector<double>> weights;
        for (const auto& [key, value] : payoff.at("weights").items())
            weights[static_cast<ArmId>(std::stol(key))] = value.get<std::vector<double>>();
        world = WorldModel::linear(d, schedule[0].arms, std::move(weights));
    } else if (payoff_kind == "table") {
        std::vector<std::pair<double, Context>> contexts;
        if (j.contains("contexts")) {
            const auto& ctx = j.at("contexts");
            if (ctx.at("kind").get<std::string>() != "finite")
                throw std::invalid_argument("world config: table payoffs need finite contexts");
            for (const auto& item : ctx.at("items"))
                contexts.emplace_back(item.at("prob").get<double>(),
                                      Context{item.value("x", std::vector<double>{})});
        } else {
            if (d != 0)
                throw std::invalid_argument("world config: contexts required when d > 0");
            contexts.emplace_back(1.0, Context{});
        }
        std::map<ArmId, std::vector<double>> means;
        for (const auto& [key, value] : payoff.at("means").items())
            means[static_cast<ArmId>(std::stol(key))] = value.get<std::vector<double>>();
        world = WorldModel::tabular(std::move(contexts), schedule[0].arms, std::move(means));
    } else {
        throw std::invalid_argument("world config: unknown payoff kind '" + payoff_kind + "'");
    }
    if (schedule.size() > 1) world.set_schedule(std::move(schedule));

    WorldSpec spec;
    spec.world = std::move(world);
    if (j.contains("logger")) {
        const auto& lg = j.at("logger");
        const std::string kind = lg.at("kind").get<std::string>();
        if (kind == "uniform") {
            spec.logger = LoggingPolicy::uniform();
        } else if (kind == "explicit") {
            spec.logger = LoggingPolicy::explicit_dist(lg.at("probs").get<std::vector<double>>());
        } else {
            throw std::invalid_argument("world config: unknown logger kind '" + kind + "'");
        }
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    return spec;
}

inline WorldSpec load_world_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open world config: " + path);
    nlohmann::json j;
    try {
        in >> j;
        return parse_world_spec(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("world config " + path + ": " + e.what());
    }
}

}  // namespace banditreplay
