#include <fstream>
#include <sstream>

#include "promptforge/errors.hpp"
#include "promptforge/prompt.hpp"

namespace promptforge {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

TokenId lookup(const Vocab &vocab, const std::string &tok, std::size_t line) {
    if (auto id = vocab.find(tok)) {
        return *id;
    }
    throw ParseError(line, "unknown token '" + tok + "'");
}

} // namespace

std::string format_assignment(const PromptTemplate &tmpl, const TriggerAssignment &assignment, const Vocab &vocab) {
    std::ostringstream out;
    out << "task_kind: " << to_string(tmpl.task_kind) << '\n';
    out << "num_task_slots: " << tmpl.num_task_slots << '\n';
    out << "placement: " << to_string(tmpl.placement) << '\n';
    out << "user_slot: " << (tmpl.has_user_slot ? to_string(tmpl.user_slot_placement) : "none") << '\n';
    out << "task:";
    for (TokenId t : assignment.task_tokens) {
        out << ' ' << vocab.token(t);
    }
    out << '\n';
    for (const auto &[user, tok] : assignment.user_tokens) {
        out << "user " << vocab.token(user) << ": " << vocab.token(tok) << '\n';
    }
    return out.str();
}

void save_assignment(const std::filesystem::path &path, const PromptTemplate &tmpl,
                     const TriggerAssignment &assignment, const Vocab &vocab) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write assignment to " + path.string());
    }
    out << format_assignment(tmpl, assignment, vocab);
}

LoadedAssignment parse_assignment(std::string_view text, const Vocab &vocab) {
    LoadedAssignment loaded;
    bool seen_kind = false, seen_slots = false, seen_task = false;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError(line_no, "expected 'key: value'");
        }
        const std::string key = trim(std::string_view(line).substr(0, colon));
        const std::string value = trim(std::string_view(line).substr(colon + 1));
        try {
            if (key == "task_kind") {
                loaded.tmpl.task_kind = parse_task_kind(value);
                seen_kind = true;
            } else if (key == "num_task_slots") {
                loaded.tmpl.num_task_slots = std::stoul(value);
                seen_slots = true;
            } else if (key == "placement") {
                loaded.tmpl.placement = parse_placement(value);
            } else if (key == "user_slot") {
                loaded.tmpl.has_user_slot = value != "none";
                if (loaded.tmpl.has_user_slot) {
                    loaded.tmpl.user_slot_placement = parse_user_slot_placement(value);
                }
            } else if (key == "task") {
                for (const auto &tok : split_whitespace(value)) {
                    loaded.assignment.task_tokens.push_back(lookup(vocab, tok, line_no));
                }
                seen_task = true;
            } else if (key.starts_with("user ")) {
                const std::string user = trim(std::string_view(key).substr(5));
                loaded.assignment.user_tokens[lookup(vocab, user, line_no)] = lookup(vocab, value, line_no);
            } else {
                throw ParseError(line_no, "unknown key '" + key + "'");
            }
        } catch (const ArgumentError &e) {
            throw ParseError(line_no, e.what());
        } catch (const std::logic_error &) {
            throw ParseError(line_no, "bad number '" + value + "'");
        }
    }
    if (!seen_kind || !seen_slots || !seen_task) {
        throw ParseError(line_no, "assignment file needs task_kind, num_task_slots and task lines");
    }
    if (loaded.assignment.task_tokens.size() != loaded.tmpl.num_task_slots) {
        throw ParseError(line_no, "task line does not match num_task_slots");
    }
    if (!loaded.tmpl.has_user_slot && !loaded.assignment.user_tokens.empty()) {
        throw ParseError(line_no, "user lines present but user_slot is none");
    }
    return loaded;
}

LoadedAssignment load_assignment(const std::filesystem::path &path, const Vocab &vocab) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read assignment from " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_assignment(buffer.str(), vocab);
}

} // namespace promptforge
