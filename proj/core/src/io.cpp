#include "qbss/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace qbss {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok, const std::string& path, int line) {
  double x = 0.0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    parse_fail(path, line, "bad number '" + tok + "'");
  return x;
}

long parse_long(const std::string& tok, const std::string& path, int line) {
  long x = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    parse_fail(path, line, "bad integer '" + tok + "'");
  return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

}  // namespace

void write_matrix_csv(const std::string& path, const MatrixXd& m) {
  std::ofstream f = open_out(path);
  f << "rows,cols\n" << m.rows() << "," << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) f << ',';
      f << format_double(m(i, j));
    }
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string line;
  int lineno = 0;
  if (!std::getline(f, line) || split(line, ',')[0] != "rows")
    parse_fail(path, 1, "expected 'rows,cols' header");
  ++lineno;
  if (!std::getline(f, line)) parse_fail(path, 2, "missing dimensions");
  ++lineno;
  const auto dims = split(line, ',');
  if (dims.size() != 2) parse_fail(path, lineno, "expected two dimensions");
  const long rows = parse_long(dims[0], path, lineno);
  const long cols = parse_long(dims[1], path, lineno);
  if (rows < 0 || cols < 0) parse_fail(path, lineno, "negative dimension");

  MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(f, line)) parse_fail(path, lineno + 1, "unexpected end of file");
    ++lineno;
    const auto toks = split(line, ',');
    if (static_cast<long>(toks.size()) != cols)
      parse_fail(path, lineno, "expected " + std::to_string(cols) + " fields, got " +
                                   std::to_string(toks.size()));
    for (long j = 0; j < cols; ++j) m(i, j) = parse_double(toks[j], path, lineno);
  }
  return m;
}

void write_vector_csv(const std::string& path, const VectorXd& v) {
  write_matrix_csv(path, v);
}

VectorXd read_vector_csv(const std::string& path) {
  const MatrixXd m = read_matrix_csv(path);
  if (m.cols() != 1)
    throw std::runtime_error(path + ": expected a single column, got " +
                             std::to_string(m.cols()));
  return m.col(0);
}

std::string encode_delta(const BinaryModel& delta) {
  const int p = delta.size();
  if (p == 0) return "";
  std::string out;
  int run_start = 0;
  bool run_val = delta.get(0);
  for (int j = 1; j <= p; ++j) {
    if (j == p || delta.get(j) != run_val) {
      if (!out.empty()) out += ';';
      out += run_val ? "1x" : "0x";
      out += std::to_string(j - run_start);
      if (j < p) {
        run_start = j;
        run_val = delta.get(j);
      }
    }
  }
  return out;
}

BinaryModel decode_delta(const std::string& rle) {
  std::vector<std::uint8_t> bits;
  if (!rle.empty()) {
    for (const std::string& tok : split(rle, ';')) {
      const std::size_t x = tok.find('x');
      if (x == std::string::npos || x == 0 || x + 1 == tok.size())
        throw std::runtime_error("bad RLE token '" + tok + "'");
      const std::string val = tok.substr(0, x);
      if (val != "0" && val != "1")
        throw std::runtime_error("bad RLE value in '" + tok + "'");
      long count = 0;
      const std::string cnt = tok.substr(x + 1);
      auto res = std::from_chars(cnt.data(), cnt.data() + cnt.size(), count);
      if (res.ec != std::errc{} || res.ptr != cnt.data() + cnt.size() || count < 1)
        throw std::runtime_error("bad RLE count in '" + tok + "'");
      bits.insert(bits.end(), count, val == "1" ? 1 : 0);
    }
  }
  BinaryModel delta(static_cast<int>(bits.size()));
  for (int j = 0; j < static_cast<int>(bits.size()); ++j)
    if (bits[j]) delta.set(j, true);
  return delta;
}

void write_trace_csv(const std::string& path, const Trace& trace, int p) {
  std::ofstream f = open_out(path);
  f << "iteration,delta,theta\n";
  f << "# p=" << p << "\n";
  for (int k = 0; k < trace.size(); ++k) {
    const BinaryModel& delta = trace.delta_samples[k];
    f << k << ',' << encode_delta(delta) << ',';
    bool first = true;
    for (int j : delta.active_indices()) {
      if (!first) f << ';';
      f << format_double(trace.theta_samples[k][j]);
      first = false;
    }
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

Trace read_trace_csv(const std::string& path, int* p_out) {
  std::ifstream f = open_in(path);
  std::string line;
  int lineno = 0;
  if (!std::getline(f, line) || line != "iteration,delta,theta")
    parse_fail(path, 1, "expected trace header");
  ++lineno;
  if (!std::getline(f, line) || line.rfind("# p=", 0) != 0)
    parse_fail(path, 2, "expected '# p=' dimension line");
  ++lineno;
  const long p = parse_long(line.substr(4), path, lineno);
  if (p < 0) parse_fail(path, lineno, "negative dimension");
  if (p_out) *p_out = static_cast<int>(p);

  Trace trace;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 3) parse_fail(path, lineno, "expected 3 fields");
    BinaryModel delta = decode_delta(fields[1]);
    if (delta.size() != p)
      parse_fail(path, lineno, "delta length " + std::to_string(delta.size()) +
                                   " does not match p=" + std::to_string(p));
    VectorXd theta = VectorXd::Zero(p);
    const std::vector<int> active = delta.active_indices();
    if (fields[2].empty()) {
      if (!active.empty()) parse_fail(path, lineno, "missing theta values");
    } else {
      const auto toks = split(fields[2], ';');
      if (toks.size() != active.size())
        parse_fail(path, lineno, "expected " + std::to_string(active.size()) +
                                     " theta values, got " + std::to_string(toks.size()));
      for (std::size_t a = 0; a < toks.size(); ++a)
        theta[active[a]] = parse_double(toks[a], path, lineno);
    }
    trace.delta_samples.push_back(std::move(delta));
    trace.theta_samples.push_back(std::move(theta));
  }
  trace.n_iter = trace.size();
  return trace;
}

}  // namespace qbss
