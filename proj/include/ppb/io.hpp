#ifndef PPB_IO_HPP
#define PPB_IO_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ppb/errors.hpp"
#include "ppb/events.hpp"

namespace ppb {

inline constexpr std::array<char, 4> EVENT_FILE_MAGIC = {'P', 'P', 'E', 'S'};
inline constexpr std::uint32_t EVENT_FILE_VERSION = 1;

namespace detail {

template <typename T>
void put_le(std::string& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return static_cast<T>(v);
}

} // namespace detail

/// Write bytes atomically: temp file in the same directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw io_error("cannot open for writing: " + tmp.string());
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw io_error("short write: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("rename failed for " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

/// Serialize detection events: 16-byte header (magic, version u32, count u64),
/// then 9-byte records of channel u8 + timestamp u64 ps, all little-endian.
inline std::string encode_events(const std::vector<DetectionEvent>& events) {
    std::string buf;
    buf.reserve(16 + events.size() * 9);
    buf.append(EVENT_FILE_MAGIC.data(), EVENT_FILE_MAGIC.size());
    detail::put_le<std::uint32_t>(buf, EVENT_FILE_VERSION);
    detail::put_le<std::uint64_t>(buf, events.size());
    for (const auto& e : events) {
        buf.push_back(static_cast<char>(e.channel));
        detail::put_le<std::uint64_t>(buf, e.timestamp_ps);
    }
    return buf;
}

inline std::vector<DetectionEvent> decode_events(const std::string& bytes,
                                                 const std::string& origin = "<memory>") {
    if (bytes.size() < 16)
        throw io_error("corrupt event file (truncated header): " + origin);
    for (std::size_t i = 0; i < 4; ++i)
        if (bytes[i] != EVENT_FILE_MAGIC[i])
            throw io_error("corrupt event file (bad magic): " + origin);
    const auto version = detail::get_le<std::uint32_t>(bytes.data() + 4);
    if (version != EVENT_FILE_VERSION)
        throw io_error("unsupported event file version " + std::to_string(version) + ": " +
                       origin);
    const auto count = detail::get_le<std::uint64_t>(bytes.data() + 8);
    if (bytes.size() != 16 + count * 9)
        throw io_error("corrupt event file (size mismatch): " + origin);
    std::vector<DetectionEvent> events(count);
    const char* p = bytes.data() + 16;
    for (std::uint64_t i = 0; i < count; ++i, p += 9) {
        events[i].channel = static_cast<std::uint8_t>(p[0]);
        events[i].timestamp_ps = detail::get_le<std::uint64_t>(p + 1);
    }
    return events;
}

inline void write_event_file(const std::filesystem::path& path,
                             const std::vector<DetectionEvent>& events) {
    write_file_atomic(path, encode_events(events));
}

inline std::vector<DetectionEvent> read_event_file(const std::filesystem::path& path) {
    return decode_events(read_file(path), path.string());
}

/// Interleave per-channel streams into file order (time-sorted, channel as
/// tiebreak) and back.
inline std::vector<DetectionEvent> interleave(
    const std::vector<std::pair<std::uint8_t, const EventStream*>>& channels) {
    std::vector<DetectionEvent> events;
    std::size_t total = 0;
    for (const auto& [ch, s] : channels) total += s->size();
    events.reserve(total);
    for (const auto& [ch, s] : channels)
        for (const Timestamp t : *s)
            events.push_back({ch, static_cast<std::uint64_t>(t)});
    std::sort(events.begin(), events.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
        if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
        return a.channel < b.channel;
    });
    return events;
}

inline std::map<std::uint8_t, EventStream> split_channels(
    const std::vector<DetectionEvent>& events) {
    std::map<std::uint8_t, EventStream> out;
    for (const auto& e : events)
        out[e.channel].push_back(static_cast<Timestamp>(e.timestamp_ps));
    return out;
}

/// Events as CSV with header `channel, timestamp_ps`; lossless counterpart of
/// the binary format as long as row order is preserved.
inline std::string events_to_csv(const std::vector<DetectionEvent>& events) {
    std::string out = "channel,timestamp_ps\n";
    char line[48];
    for (const auto& e : events) {
        std::snprintf(line, sizeof(line), "%u,%llu\n", static_cast<unsigned>(e.channel),
                      static_cast<unsigned long long>(e.timestamp_ps));
        out += line;
    }
    return out;
}

inline std::vector<DetectionEvent> events_from_csv(const std::string& csv,
                                                   const std::string& origin = "<memory>") {
    std::vector<DetectionEvent> events;
    std::istringstream ss(csv);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "channel,timestamp_ps")
                throw io_error(origin + ":1: expected header 'channel,timestamp_ps'");
            continue;
        }
        if (line.empty()) continue;
        unsigned ch = 0;
        unsigned long long ts = 0;
        if (std::sscanf(line.c_str(), "%u,%llu", &ch, &ts) != 2 || ch > 255)
            throw io_error(origin + ":" + std::to_string(line_no) + ": malformed event row");
        events.push_back({static_cast<std::uint8_t>(ch), ts});
    }
    return events;
}

/// FNV-1a 64-bit, used for output checksums and scenario hashes.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Key/value configuration text with [section] headers, '#' comments and
/// dotted lookup ("section.key"). Carries line numbers for error reporting.
class ConfigText {
public:
    static ConfigText parse(const std::string& text, const std::string& origin = "<memory>") {
        ConfigText cfg;
        cfg.origin_ = origin;
        std::istringstream ss(text);
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(ss, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw validation_error(origin + ":" + std::to_string(line_no) +
                                           ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw validation_error(origin + ":" + std::to_string(line_no) +
                                       ": expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw validation_error(origin + ":" + std::to_string(line_no) + ": empty key");
            const std::string full = section.empty() ? key : section + "." + key;
            cfg.values_[full] = value;
        }
        return cfg;
    }

    static ConfigText parse_file(const std::filesystem::path& path) {
        return parse(read_file(path), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw validation_error(origin_ + ": missing field '" + key + "'");
        return it->second;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key) const { return to_double(key, get_string(key)); }

    double get_double(const std::string& key, double fallback) const {
        const auto it = values_.find(key);
        return it == values_.end() ? fallback : to_double(key, it->second);
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const auto v = std::stoll(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw validation_error(origin_ + ": field '" + key + "' is not an integer: " +
                                   it->second);
        }
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        const auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw validation_error(origin_ + ": field '" + key + "' is not an integer: " +
                                   it->second);
        }
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    double to_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            const double d = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing");
            return d;
        } catch (const std::exception&) {
            throw validation_error(origin_ + ": field '" + key + "' is not a number: " + v);
        }
    }

    std::map<std::string, std::string> values_;
    std::string origin_;
};

} // namespace ppb

#endif
