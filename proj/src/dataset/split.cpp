#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "abyss/dataset.hpp"
#include "abyss/error.hpp"

namespace abyss::dataset {

SplitManifest split_by_session(const std::vector<FrameRecord>& records, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("split ratio must be in (0, 1)");

  std::map<std::string, std::size_t> frames_per_session;
  for (const auto& r : records) ++frames_per_session[r.session_id];
  if (frames_per_session.size() < 2)
    throw InvalidArgument("split needs at least 2 sessions, got " + std::to_string(frames_per_session.size()));

  std::vector<std::string> order;
  order.reserve(frames_per_session.size());
  for (const auto& [id, n] : frames_per_session) order.push_back(id);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const double target = ratio * static_cast<double>(records.size());
  std::set<std::string> train_sessions;
  std::size_t train_frames = 0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    if (static_cast<double>(train_frames) >= target) break;
    train_sessions.insert(order[i]);
    train_frames += frames_per_session[order[i]];
  }

  SplitManifest m;
  m.seed = seed;
  m.ratio = ratio;
  for (const auto& r : records) (train_sessions.count(r.session_id) ? m.train : m.test).push_back(r);
  return m;
}

namespace {

std::string format_ratio(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_records(std::ostream& os, const std::vector<FrameRecord>& rs) {
  for (const auto& r : rs) os << r.session_id << '\t' << r.source_path << '\t' << r.frame_index << '\n';
}

}  // namespace

void write_manifest(std::ostream& os, const SplitManifest& m) {
  os << "#split seed=" << m.seed << " ratio=" << format_ratio(m.ratio) << '\n';
  os << "#train\n";
  write_records(os, m.train);
  os << "#test\n";
  write_records(os, m.test);
}

void save_manifest(const std::filesystem::path& path, const SplitManifest& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write manifest " + path.string());
  write_manifest(os, m);
  if (!os) throw IoError("short write to manifest " + path.string());
}

SplitManifest read_manifest(std::istream& is) {
  SplitManifest m;
  std::string line;
  if (!std::getline(is, line) || line.rfind("#split ", 0) != 0) throw InvalidArgument("manifest: missing #split header");
  {
    std::istringstream hs(line.substr(7));
    std::string tok;
    bool have_seed = false, have_ratio = false;
    while (hs >> tok) {
      if (tok.rfind("seed=", 0) == 0) {
        m.seed = std::stoull(tok.substr(5));
        have_seed = true;
      } else if (tok.rfind("ratio=", 0) == 0) {
        const std::string v = tok.substr(6);
        auto res = std::from_chars(v.data(), v.data() + v.size(), m.ratio);
        if (res.ec != std::errc{}) throw InvalidArgument("manifest: bad ratio");
        have_ratio = true;
      }
    }
    if (!have_seed || !have_ratio) throw InvalidArgument("manifest: header needs seed= and ratio=");
  }

  std::vector<FrameRecord>* section = nullptr;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line == "#train") {
      section = &m.train;
      continue;
    }
    if (line == "#test") {
      section = &m.test;
      continue;
    }
    if (line[0] == '#') continue;
    if (section == nullptr) throw InvalidArgument("manifest: record before #train/#test section");
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
      throw InvalidArgument("manifest: line " + std::to_string(lineno) + " is not session<TAB>path<TAB>frame");
    FrameRecord r{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), 0};
    const std::string idx = line.substr(t2 + 1);
    auto res = std::from_chars(idx.data(), idx.data() + idx.size(), r.frame_index);
    if (res.ec != std::errc{} || res.ptr != idx.data() + idx.size())
      throw InvalidArgument("manifest: bad frame index on line " + std::to_string(lineno));
    section->push_back(std::move(r));
  }
  return m;
}

SplitManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open manifest " + path.string());
  return read_manifest(is);
}

}  // namespace abyss::dataset
