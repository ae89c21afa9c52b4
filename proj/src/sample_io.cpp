#include "atelab/sample_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "atelab/errors.hpp"
#include "atelab/format.hpp"

namespace atelab {

namespace {

std::vector<std::string> split_csv_line(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_double(const std::string& field, std::size_t line_no) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw ParseError("line " + std::to_string(line_no) + ": bad numeric field '" +
                     field + "'");
  return v;
}

int parse_treatment(const std::string& field, std::size_t line_no) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ParseError("line " + std::to_string(line_no) +
                   ": treatment indicator must be 0 or 1, got '" + field + "'");
}

}  // namespace

Sample read_sample_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("line 1: missing header row");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "d" || header[1] != "y")
    throw ParseError("line 1: header must be d,y,x1,...,xK");
  for (std::size_t k = 2; k < header.size(); ++k)
    if (header[k] != "x" + std::to_string(k - 1))
      throw ParseError("line 1: expected column x" + std::to_string(k - 1) +
                       ", got '" + header[k] + "'");
  const std::size_t dim = header.size() - 2;

  Sample sample;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    Unit u;
    u.d = parse_treatment(fields[0], line_no);
    u.y = parse_double(fields[1], line_no);
    u.x.values.resize(dim);
    for (std::size_t k = 0; k < dim; ++k)
      u.x.values[k] = parse_double(fields[k + 2], line_no);
    sample.units.push_back(std::move(u));
  }
  require_well_formed(sample);
  return sample;
}

Sample read_sample_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open sample file '" + path + "'");
  return read_sample_csv(in);
}

void write_sample_csv(std::ostream& out, const Sample& sample) {
  const std::size_t dim = sample.dim();
  out << "d,y";
  for (std::size_t k = 1; k <= dim; ++k) out << ",x" << k;
  out << "\n";
  for (const Unit& u : sample.units) {
    out << u.d << ',' << fmt_g17(u.y);
    for (double v : u.x.values) out << ',' << fmt_g17(v);
    out << "\n";
  }
}

}  // namespace atelab
