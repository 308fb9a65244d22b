#ifndef RCGAME_TRACE_IO_HPP
#define RCGAME_TRACE_IO_HPP

#include <iosfwd>
#include <string>

#include "rcgame/encoder_sim.hpp"

namespace rcgame {

// Trace file layout (line oriented, whitespace delimited):
//   rctrace v1
//   name <identifier>
//   width <int>   height <int>   frames <int>   gop <int>
//   fps <double>  ref_bitrate <double>  seed <uint64>
//   hierarchy <frames integers>
//   data frame ctu c k
//   <frame> <ctu> <c> <k>        (one row per CTU per frame)
// Field order is stable; doubles are written round-trip exact.

void save_trace(const SequenceTrace& trace, std::ostream& os);
void save_trace_file(const SequenceTrace& trace, const std::string& path);

SequenceTrace load_trace(std::istream& is);
SequenceTrace load_trace_file(const std::string& path);

}  // namespace rcgame

#endif
