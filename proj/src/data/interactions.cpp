#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "promptforge/data.hpp"
#include "promptforge/errors.hpp"

namespace promptforge {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) {
            break;
        }
        start = tab + 1;
    }
    return fields;
}

template <typename Int>
Int parse_int(std::string_view text, std::size_t line, const char *what) {
    Int value{};
    const auto *end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError(line, std::string("bad ") + what + " '" + std::string(text) + "'");
    }
    return value;
}

bool is_token(std::string_view s) { return !s.empty() && s.find_first_of(" \r\n") == std::string_view::npos; }

} // namespace

std::size_t InteractionLog::num_records() const {
    std::size_t n = 0;
    for (const auto &[user, records] : users) {
        n += records.size();
    }
    return n;
}

InteractionLog load_interactions(const std::filesystem::path &path, const LoadOptions &options) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read interactions from " + path.string());
    }
    InteractionLog log;
    std::map<std::tuple<std::string, std::string, std::int64_t>, std::size_t> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_tabs(line);
        if (fields.size() < 3 || fields.size() > 5) {
            throw ParseError(line_no, "expected 3 to 5 tab-separated fields, got " + std::to_string(fields.size()));
        }
        if (!is_token(fields[0]) || !is_token(fields[1])) {
            throw ParseError(line_no, "user and item ids must be non-empty tokens");
        }
        Interaction rec;
        rec.user = std::string(fields[0]);
        rec.item = std::string(fields[1]);
        rec.timestamp = parse_int<std::int64_t>(fields[2], line_no, "timestamp");
        if (fields.size() >= 4 && !fields[3].empty()) {
            rec.rating = parse_int<int>(fields[3], line_no, "rating");
        }
        if (fields.size() == 5) {
            rec.explanation = split_whitespace(fields[4]);
        }
        auto key = std::make_tuple(rec.user, rec.item, rec.timestamp);
        if (auto it = seen.find(key); it != seen.end()) {
            throw ParseError(line_no, "duplicate interaction (first seen on line " + std::to_string(it->second) + ")");
        }
        seen.emplace(std::move(key), line_no);
        if ((options.min_timestamp && rec.timestamp < *options.min_timestamp) ||
            (options.max_timestamp && rec.timestamp > *options.max_timestamp)) {
            continue;
        }
        log.item_titles.try_emplace(rec.item);
        log.users[rec.user].push_back(std::move(rec));
    }
    for (auto &[user, records] : log.users) {
        std::stable_sort(records.begin(), records.end(),
                         [](const Interaction &a, const Interaction &b) { return a.timestamp < b.timestamp; });
    }
    return log;
}

void write_interactions(const InteractionLog &log, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write interactions to " + path.string());
    }
    out << "# user\titem\ttimestamp\trating\texplanation\n";
    for (const auto &[user, records] : log.users) {
        for (const auto &r : records) {
            out << r.user << '\t' << r.item << '\t' << r.timestamp;
            if (r.rating || !r.explanation.empty()) {
                out << '\t';
                if (r.rating) {
                    out << *r.rating;
                }
            }
            if (!r.explanation.empty()) {
                out << '\t';
                for (std::size_t i = 0; i < r.explanation.size(); ++i) {
                    out << (i ? " " : "") << r.explanation[i];
                }
            }
            out << '\n';
        }
    }
    if (!out) {
        throw IoError("failed writing interactions to " + path.string());
    }
}

void load_item_titles(const std::filesystem::path &path, InteractionLog &log) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read item titles from " + path.string());
    }
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || !is_token(fields[0])) {
            throw ParseError(line_no, "expected 'item<TAB>title tokens'");
        }
        log.item_titles[std::string(fields[0])] = split_whitespace(fields[1]);
    }
}

void write_item_titles(const InteractionLog &log, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write item titles to " + path.string());
    }
    out << "# item\ttitle\n";
    for (const auto &[item, title] : log.item_titles) {
        out << item << '\t';
        for (std::size_t i = 0; i < title.size(); ++i) {
            out << (i ? " " : "") << title[i];
        }
        out << '\n';
    }
}

} // namespace promptforge
