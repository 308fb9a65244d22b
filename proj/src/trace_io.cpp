#include "rcgame/trace_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace rcgame {

namespace {

[[noreturn]] void parse_fail(const std::string& what) {
  throw std::runtime_error("trace parse error: " + what);
}

void expect_token(std::istream& is, const std::string& want) {
  std::string tok;
  if (!(is >> tok) || tok != want) parse_fail("expected '" + want + "'");
}

}  // namespace

void save_trace(const SequenceTrace& trace, std::ostream& os) {
  os << std::setprecision(17);
  os << "rctrace v1\n";
  os << "name " << trace.name << "\n";
  os << "width " << trace.width << " height " << trace.height << " frames "
     << trace.frame_count << " gop " << trace.gop_size << "\n";
  os << "fps " << trace.fps << " ref_bitrate " << trace.ref_bitrate << " seed "
     << trace.noise_seed << "\n";
  os << "hierarchy";
  for (int level : trace.hierarchy) os << ' ' << level;
  os << "\n";
  os << "data frame ctu c k\n";
  for (int i = 0; i < trace.frame_count; ++i) {
    for (std::size_t j = 0; j < trace.truth[i].size(); ++j) {
      os << i << ' ' << j << ' ' << trace.truth[i][j].c << ' '
         << trace.truth[i][j].k << "\n";
    }
  }
}

void save_trace_file(const SequenceTrace& trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  save_trace(trace, os);
}

SequenceTrace load_trace(std::istream& is) {
  SequenceTrace trace;
  expect_token(is, "rctrace");
  expect_token(is, "v1");
  expect_token(is, "name");
  if (!(is >> trace.name)) parse_fail("name");
  expect_token(is, "width");
  is >> trace.width;
  expect_token(is, "height");
  is >> trace.height;
  expect_token(is, "frames");
  is >> trace.frame_count;
  expect_token(is, "gop");
  is >> trace.gop_size;
  expect_token(is, "fps");
  is >> trace.fps;
  expect_token(is, "ref_bitrate");
  is >> trace.ref_bitrate;
  expect_token(is, "seed");
  is >> trace.noise_seed;
  if (!is) parse_fail("header values");
  if (trace.width <= 0 || trace.height <= 0 || trace.frame_count <= 0 ||
      trace.gop_size <= 0) {
    parse_fail("non-positive dimensions");
  }
  expect_token(is, "hierarchy");
  trace.hierarchy.resize(trace.frame_count);
  for (auto& level : trace.hierarchy) {
    if (!(is >> level)) parse_fail("hierarchy entries");
  }
  expect_token(is, "data");
  expect_token(is, "frame");
  expect_token(is, "ctu");
  expect_token(is, "c");
  expect_token(is, "k");

  const std::size_t n_ctu = partition_ctu_types(trace.width, trace.height).size();
  trace.truth.assign(trace.frame_count, std::vector<RdParams>(n_ctu));
  std::vector<std::vector<bool>> seen(trace.frame_count,
                                      std::vector<bool>(n_ctu, false));
  int frame = 0;
  std::size_t ctu = 0;
  RdParams p;
  while (is >> frame >> ctu >> p.c >> p.k) {
    if (frame < 0 || frame >= trace.frame_count || ctu >= n_ctu) {
      parse_fail("row index out of range");
    }
    if (!(p.c >= 0.05 && p.c <= 5.0) || !(p.k >= 0.01 && p.k <= 1e6)) {
      parse_fail("ground-truth parameters out of range");
    }
    trace.truth[frame][ctu] = p;
    seen[frame][ctu] = true;
  }
  for (int i = 0; i < trace.frame_count; ++i) {
    for (std::size_t j = 0; j < n_ctu; ++j) {
      if (!seen[i][j]) {
        std::ostringstream msg;
        msg << "missing row for frame " << i << " ctu " << j;
        parse_fail(msg.str());
      }
    }
  }
  return trace;
}

SequenceTrace load_trace_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open trace: " + path);
  return load_trace(is);
}

}  // namespace rcgame
