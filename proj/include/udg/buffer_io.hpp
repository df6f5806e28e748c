#pragma once

// Text buffer format, one line per record:
//
//   # udg-buffer v1 env=<id> seed=<u64> policy_ids=<i,i,...> reward=<desc> count=<n>
//   s=<x,y> a=<ax,ay> r=<r> s2=<x,y> t=<int> done=<0|1> policy_id=<int>
//   ...
//
// Floats use the shortest decimal form that reads back to the same double.
// An episode begins at every record with t=0.

#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "mdp.hpp"

namespace udg {

namespace detail {

inline std::map<std::string, std::string, std::less<>> split_fields(std::string_view line)
{
    std::map<std::string, std::string, std::less<>> fields;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && line[pos] == ' ') ++pos;
        if (pos >= line.size()) break;
        auto end = line.find(' ', pos);
        if (end == line.npos) end = line.size();
        const auto token = line.substr(pos, end - pos);
        const auto eq = token.find('=');
        if (eq != token.npos) fields.emplace(std::string(token.substr(0, eq)), std::string(token.substr(eq + 1)));
        pos = end;
    }
    return fields;
}

inline const std::string& field(const std::map<std::string, std::string, std::less<>>& f, std::string_view key)
{
    auto it = f.find(key);
    if (it == f.end()) throw std::runtime_error("missing field '" + std::string(key) + "'");
    return it->second;
}

inline std::string sanitize_token(std::string s)
{
    for (auto& c : s)
        if (c == ' ' || c == '\n' || c == '\t') c = '_';
    return s.empty() ? std::string("none") : s;
}

} // namespace detail

inline void write_buffer(std::ostream& os, const Buffer& buf)
{
    os << "# udg-buffer v1 env=" << detail::sanitize_token(buf.env_id) << " seed=" << buf.meta.seed << " policy_ids=";
    for (std::size_t k = 0; k < buf.meta.policy_ids.size(); ++k) os << (k ? "," : "") << buf.meta.policy_ids[k];
    os << " reward=" << detail::sanitize_token(buf.meta.reward_desc) << " count=" << buf.transitions.size() << '\n';
    for (const auto& tr : buf.transitions) {
        os << "s=" << format_vec(tr.s) << " a=" << format_vec(tr.a) << " r=" << format_double(tr.r)
           << " s2=" << format_vec(tr.s2) << " t=" << tr.t << " done=" << (tr.done ? 1 : 0)
           << " policy_id=" << tr.policy_id << '\n';
    }
}

inline Buffer read_buffer(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("# udg-buffer v1", 0) != 0)
        throw std::runtime_error("read_buffer: missing 'udg-buffer v1' header");
    const auto header = detail::split_fields(line);
    Buffer buf;
    buf.env_id = detail::field(header, "env");
    buf.meta.seed = static_cast<std::uint64_t>(std::stoull(detail::field(header, "seed")));
    buf.meta.reward_desc = detail::field(header, "reward");
    if (const auto& ids = detail::field(header, "policy_ids"); !ids.empty()) {
        std::stringstream ss(ids);
        std::string tok;
        while (std::getline(ss, tok, ',')) buf.meta.policy_ids.push_back(static_cast<int>(parse_int(tok)));
    }
    const auto count = static_cast<std::size_t>(parse_int(detail::field(header, "count")));
    buf.transitions.reserve(count);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_fields(line);
        Transition tr;
        tr.s = parse_vec(detail::field(f, "s"));
        tr.a = parse_vec(detail::field(f, "a"));
        tr.r = parse_double(detail::field(f, "r"));
        tr.s2 = parse_vec(detail::field(f, "s2"));
        tr.t = static_cast<int>(parse_int(detail::field(f, "t")));
        tr.done = parse_int(detail::field(f, "done")) != 0;
        tr.policy_id = static_cast<int>(parse_int(detail::field(f, "policy_id")));
        if (tr.t == 0 || buf.transitions.empty()) buf.episode_starts.push_back(buf.transitions.size());
        buf.transitions.push_back(std::move(tr));
    }
    if (buf.transitions.size() != count)
        throw std::runtime_error("read_buffer: header count " + std::to_string(count) + " but read " +
                                 std::to_string(buf.transitions.size()) + " records");
    return buf;
}

inline void save_buffer(const std::string& path, const Buffer& buf)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    write_buffer(os, buf);
}

inline Buffer load_buffer(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return read_buffer(is);
}

} // namespace udg
