#include "subalign/external.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "subalign/errors.hpp"

namespace subalign {

namespace {

namespace fs = std::filesystem;

// Temp file removed on scope exit.
class TempFile {
 public:
  explicit TempFile(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    const auto id = counter.fetch_add(1);
    path_ = fs::temp_directory_path() /
            ("subalign-" + std::to_string(::getpid()) + "-" + std::to_string(id) + "-" + tag);
  }
  ~TempFile() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string substitute(const std::string& tmpl, const std::string& key,
                       const std::string& value) {
  std::string out = tmpl;
  std::size_t pos = 0;
  while ((pos = out.find(key, pos)) != std::string::npos) {
    out.replace(pos, key.size(), value);
    pos += value.size();
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_pipe_bitext(const Bitext& bitext, bool swapped, std::ostream& out) {
  const auto& left = swapped ? bitext.target : bitext.source;
  const auto& right = swapped ? bitext.source : bitext.target;
  for (std::size_t s = 0; s < left.size(); ++s) {
    for (std::size_t i = 0; i < left[s].size(); ++i) {
      if (i) out << ' ';
      out << left[s][i];
    }
    out << " ||| ";
    for (std::size_t i = 0; i < right[s].size(); ++i) {
      if (i) out << ' ';
      out << right[s][i];
    }
    out << '\n';
  }
}

AlignmentSet external_align_direction(const Bitext& bitext, const std::string& command_template,
                                      bool reverse) {
  if (command_template.find("{input}") == std::string::npos ||
      command_template.find("{output}") == std::string::npos) {
    throw AdapterError("external aligner command must contain {input} and {output}: '" +
                       command_template + "'");
  }

  TempFile input(reverse ? "rev.bitext" : "fwd.bitext");
  TempFile output(reverse ? "rev.align" : "fwd.align");
  TempFile diagnostics("stderr");
  {
    std::ofstream out(input.path());
    if (!out) throw AdapterError("cannot write " + input.path().string());
    write_pipe_bitext(bitext, reverse, out);
  }

  std::string command = substitute(command_template, "{input}", input.path().string());
  command = substitute(command, "{output}", output.path().string());
  const std::string wrapped = "( " + command + " ) 2> " + diagnostics.path().string();
  const int status = std::system(wrapped.c_str());
  if (status != 0) {
    throw AdapterError("external aligner failed (status " + std::to_string(status) +
                       "): " + command + "\n" + read_file(diagnostics.path()));
  }

  std::ifstream result(output.path());
  if (!result) {
    throw AdapterError("external aligner produced no output file: " + command + "\n" +
                       read_file(diagnostics.path()));
  }
  AlignmentSet parsed;
  try {
    parsed = read_pharaoh(result);
  } catch (const ParseError& e) {
    throw AdapterError(std::string("external aligner output is not valid Pharaoh: ") +
                       e.what() + "\n" + read_file(diagnostics.path()));
  }
  if (!reverse) return parsed;

  std::vector<Link> transposed;
  transposed.reserve(parsed.size());
  for (const auto& l : parsed.links()) {
    transposed.push_back(Link{l.sentence, l.target, l.source});
  }
  return AlignmentSet(std::move(transposed));
}

BidirectionalAlignment external_align(const Bitext& bitext,
                                      const std::string& command_template) {
  BidirectionalAlignment out;
  out.forward = external_align_direction(bitext, command_template, false);
  out.reverse = external_align_direction(bitext, command_template, true);
  return out;
}

}  // namespace subalign
