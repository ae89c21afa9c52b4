#pragma once

#include <iosfwd>
#include <string>

#include "atelab/core_model.hpp"

namespace atelab {

// CSV schema: header "d,y,x1,...,xK"; d integer 0/1, other fields decimal
// reals; every row must match the header arity.  Throws ParseError with the
// 1-based line number on any malformed content.
Sample read_sample_csv(std::istream& in);
Sample read_sample_csv_file(const std::string& path);

void write_sample_csv(std::ostream& out, const Sample& sample);

}  // namespace atelab
