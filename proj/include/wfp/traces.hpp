#pragma once

// Raw packet traces: the on-disk text format and corpus directory layout.
//
// A trace file holds one packet per line as "<timestamp>\t<direction>",
// written with "%.6f\t%+d". A corpus directory holds
//   monitored/<site>-<instance>.txt
//   unmonitored/<id>.txt

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "wfp/error.hpp"

namespace wfp {

// +1 travels toward the server, -1 toward the client.
enum class Direction : std::int8_t { incoming = -1, outgoing = 1 };

inline int to_int(Direction d) { return static_cast<int>(d); }

struct Packet {
  double timestamp = 0.0;
  Direction direction = Direction::outgoing;

  friend bool operator==(const Packet&, const Packet&) = default;
};

class RawTrace {
 public:
  explicit RawTrace(std::vector<Packet> packets) : packets_(std::move(packets)) {
    if (packets_.empty()) throw EmptyTrace("trace has no packets");
    for (std::size_t i = 0; i < packets_.size(); ++i) {
      const auto& p = packets_[i];
      if (!std::isfinite(p.timestamp) || p.timestamp < 0.0)
        throw TraceError("packet " + std::to_string(i) + ": timestamp must be finite and >= 0");
      if (p.direction != Direction::incoming && p.direction != Direction::outgoing)
        throw TraceError("packet " + std::to_string(i) + ": direction must be +1 or -1");
      if (i > 0 && p.timestamp < packets_[i - 1].timestamp)
        throw OrderError("packet " + std::to_string(i) + ": timestamp decreases");
    }
  }

  std::span<const Packet> packets() const { return packets_; }
  std::size_t size() const { return packets_.size(); }
  const Packet& operator[](std::size_t i) const { return packets_[i]; }
  const Packet& front() const { return packets_.front(); }
  const Packet& back() const { return packets_.back(); }
  double duration() const { return packets_.back().timestamp - packets_.front().timestamp; }

  friend bool operator==(const RawTrace&, const RawTrace&) = default;

 private:
  std::vector<Packet> packets_;
};

struct TraceLabel {
  int class_id = 0;  // site index in [0, n_mon), or n_mon for unmonitored
  int instance_id = 0;

  friend bool operator==(const TraceLabel&, const TraceLabel&) = default;
};

struct CorpusEntry {
  RawTrace trace;
  TraceLabel label;
  std::string source;  // path relative to the corpus root
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  int n_mon = 0;

  int unmonitored_class() const { return n_mon; }
  bool is_monitored(const TraceLabel& l) const { return l.class_id < n_mon; }

  std::vector<TraceLabel> labels() const {
    std::vector<TraceLabel> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.label);
    return out;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

template <class Int>
std::optional<Int> parse_int(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

inline RawTrace parse_trace(std::string_view text) {
  std::vector<Packet> packets;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "expected <timestamp>\\t<direction>");
    const auto ts = detail::parse_double(detail::trim(line.substr(0, tab)));
    if (!ts || !std::isfinite(*ts) || *ts < 0.0) throw ParseError(line_no, "bad timestamp");
    const auto dir = detail::parse_int<int>(detail::trim(line.substr(tab + 1)));
    if (!dir || (*dir != 1 && *dir != -1)) throw ParseError(line_no, "direction must be +1 or -1");
    if (!packets.empty() && *ts < packets.back().timestamp)
      throw OrderError("line " + std::to_string(line_no) + ": timestamp decreases");
    packets.push_back({*ts, static_cast<Direction>(*dir)});
  }
  if (packets.empty()) throw EmptyTrace("trace file has no packets");
  return RawTrace(std::move(packets));
}

inline std::string serialize_trace(const RawTrace& trace) {
  std::string out;
  out.reserve(trace.size() * 14);
  char buf[64];
  for (const auto& p : trace.packets()) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p.timestamp, std::chars_format::fixed, 6);
    out.append(buf, ptr);
    out += p.direction == Direction::outgoing ? "\t+1\n" : "\t-1\n";
  }
  return out;
}

inline RawTrace read_trace_file(const std::filesystem::path& path) {
  return parse_trace(detail::read_file(path));
}

inline void write_trace_file(const std::filesystem::path& path, const RawTrace& trace) {
  detail::write_file(path, serialize_trace(trace));
}

// Relative paths of every trace file in a corpus directory, in canonical
// order: monitored by (site, instance), then unmonitored by id.
struct CorpusFile {
  std::string relative;
  TraceLabel label;  // class_id == -1 marks an unmonitored file
};

inline std::vector<CorpusFile> list_corpus_files(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw LayoutError("corpus root is not a directory: " + root.string());
  std::vector<CorpusFile> monitored, unmonitored;

  const auto scan = [&](const char* sub, auto&& handle) {
    const fs::path dir = root / sub;
    if (!fs::exists(dir)) return;
    if (!fs::is_directory(dir)) throw LayoutError(dir.string() + " is not a directory");
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string name = e.path().filename().string();
      if (e.path().extension() != ".txt") throw LayoutError("unexpected file " + (dir / name).string());
      handle(name, e.path().stem().string());
    }
  };

  scan("monitored", [&](const std::string& name, const std::string& stem) {
    const auto dash = stem.find('-');
    const auto site = dash == std::string::npos ? std::nullopt : detail::parse_int<int>(std::string_view(stem).substr(0, dash));
    const auto inst = dash == std::string::npos ? std::nullopt : detail::parse_int<int>(std::string_view(stem).substr(dash + 1));
    if (!site || !inst || *site < 0 || *inst < 0 || stem.front() == '+')
      throw LayoutError("monitored file name must be <site>-<instance>.txt: " + name);
    monitored.push_back({"monitored/" + name, {*site, *inst}});
  });
  scan("unmonitored", [&](const std::string& name, const std::string& stem) {
    const auto id = detail::parse_int<int>(stem);
    if (!id || *id < 0 || stem.front() == '+') throw LayoutError("unmonitored file name must be <id>.txt: " + name);
    unmonitored.push_back({"unmonitored/" + name, {-1, *id}});
  });

  const auto by_label = [](const CorpusFile& a, const CorpusFile& b) {
    return std::pair(a.label.class_id, a.label.instance_id) < std::pair(b.label.class_id, b.label.instance_id);
  };
  std::sort(monitored.begin(), monitored.end(), by_label);
  std::sort(unmonitored.begin(), unmonitored.end(), by_label);
  monitored.insert(monitored.end(), unmonitored.begin(), unmonitored.end());
  return monitored;
}

inline Corpus load_corpus(const std::filesystem::path& root, int n_mon) {
  if (n_mon < 0) throw LayoutError("n_mon must be non-negative");
  const auto files = list_corpus_files(root);

  std::vector<bool> seen(static_cast<std::size_t>(n_mon), false);
  for (const auto& f : files) {
    if (f.label.class_id < 0) continue;
    if (f.label.class_id >= n_mon)
      throw LayoutError("site index " + std::to_string(f.label.class_id) + " outside [0, " + std::to_string(n_mon) + "): " + f.relative);
    seen[static_cast<std::size_t>(f.label.class_id)] = true;
  }
  for (int s = 0; s < n_mon; ++s)
    if (!seen[static_cast<std::size_t>(s)]) throw LayoutError("missing monitored site " + std::to_string(s));

  Corpus corpus;
  corpus.n_mon = n_mon;
  std::string failures;
  for (const auto& f : files) {
    try {
      TraceLabel label = f.label;
      if (label.class_id < 0) label.class_id = n_mon;
      corpus.entries.push_back({read_trace_file(root / f.relative), label, f.relative});
    } catch (const TraceError& e) {
      failures += (failures.empty() ? "" : "; ") + f.relative + ": " + e.kind() + ": " + e.what();
    }
  }
  if (!failures.empty()) throw CorpusError(failures);
  return corpus;
}

inline std::string corpus_file_name(const TraceLabel& label, int n_mon) {
  if (label.class_id >= n_mon) return "unmonitored/" + std::to_string(label.instance_id) + ".txt";
  return "monitored/" + std::to_string(label.class_id) + "-" + std::to_string(label.instance_id) + ".txt";
}

inline void write_corpus(const Corpus& corpus, const std::filesystem::path& root) {
  std::filesystem::create_directories(root / "monitored");
  std::filesystem::create_directories(root / "unmonitored");
  for (const auto& e : corpus.entries)
    write_trace_file(root / corpus_file_name(e.label, corpus.n_mon), e.trace);
}

}  // namespace wfp
