#pragma once

#include <string>

#include "subalign/aligner.hpp"
#include "subalign/corpus.hpp"

namespace subalign {

// Runs an external word aligner over a bitext. The command template must
// contain {input} and {output} placeholders; the adapter writes the corpus
// as "source ||| target" lines, invokes the command once per direction
// (side-swapped for the reverse run) and parses Pharaoh output. Throws
// AdapterError on nonzero exit or malformed output.
BidirectionalAlignment external_align(const Bitext& bitext, const std::string& command_template);

// Single directional run; reverse=true swaps the sides before writing the
// bitext and transposes the parsed links back.
AlignmentSet external_align_direction(const Bitext& bitext, const std::string& command_template,
                                      bool reverse);

// "source ||| target" serialization used by common aligner tools.
void write_pipe_bitext(const Bitext& bitext, bool swapped, std::ostream& out);

}  // namespace subalign
