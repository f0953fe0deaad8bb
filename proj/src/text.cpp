#include "sassopt/text.hpp"

#include <cctype>
#include <stdexcept>

namespace sassopt {

std::string ParseDiagnostic::str() const {
  return "line " + std::to_string(line) +
         (severity == Severity::Error ? ": error: " : ": warning: ") + message;
}

std::string normalize_newlines(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    out += text[i];
  }
  return out;
}

namespace {

void skip_space(std::string_view& s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
}

std::string_view rtrim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool is_mnemonic(std::string_view m) {
  if (m.empty() || !std::isupper(static_cast<unsigned char>(m[0]))) return false;
  for (char c : m)
    if (!(std::isupper(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
          c == '.' || c == '_'))
      return false;
  return m.back() != '.';
}

std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '[' || c == '(') ++depth;
    else if (c == ']' || c == ')') --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(s.substr(start));
  return out;
}

enum class LineKind { Text, Instruction, Error };

struct LineParse {
  LineKind kind = LineKind::Text;
  std::optional<Instruction> instr;
  std::string error;
  std::vector<std::string> warnings;
  bool opens_block_comment = false;
};

LineParse parse_line(std::string_view line, int line_no) {
  LineParse out;
  std::string_view s = line;
  std::optional<ControlCode> control;

  for (;;) {
    skip_space(s);
    if (s.starts_with("/*")) {
      auto end = s.find("*/", 2);
      if (end == std::string_view::npos) {
        out.opens_block_comment = true;
        if (control) {
          out.kind = LineKind::Error;
          out.error = "control code without instruction";
        }
        return out;
      }
      s.remove_prefix(end + 2);
      continue;
    }
    if (!control && s.starts_with("[")) {
      auto close = s.find(']');
      std::string_view block = close == std::string_view::npos ? s : s.substr(0, close + 1);
      if (block.find(':') != std::string_view::npos || block.starts_with("[B")) {
        std::string err;
        auto cc = close == std::string_view::npos ? std::nullopt : ControlCode::parse(block, &err);
        if (!cc) {
          out.kind = LineKind::Error;
          out.error = "malformed control code: " + (err.empty() ? "unterminated" : err);
          return out;
        }
        control = *cc;
        s.remove_prefix(close + 1);
        continue;
      }
    }
    break;
  }

  auto reject = [&](std::string msg) {
    if (control) {
      out.kind = LineKind::Error;
      out.error = std::move(msg);
    }
    return out;
  };

  if (s.empty() || s.starts_with("//") || is_label_line(s)) return reject("control code without instruction");

  auto semi = s.find(';');
  if (semi == std::string_view::npos) return reject("instruction is missing ';'");
  std::string_view body = rtrim(s.substr(0, semi));

  std::optional<Predicate> pred;
  if (body.starts_with("@")) {
    std::string_view p = body.substr(1);
    bool neg = false;
    if (p.starts_with("!")) {
      neg = true;
      p.remove_prefix(1);
    }
    auto sp = p.find_first_of(" \t");
    Operand po = Operand::parse(p.substr(0, sp));
    if (po.kind != OperandKind::Predicate || po.invert || sp == std::string_view::npos)
      return reject("malformed guard predicate");
    pred = Predicate{*po.reg, neg};
    body = p.substr(sp);
    skip_space(body);
  }

  auto sp = body.find_first_of(" \t");
  std::string_view mnemonic = body.substr(0, sp);
  if (!is_mnemonic(mnemonic)) return reject("malformed mnemonic '" + std::string(mnemonic) + "'");

  std::vector<Operand> ops;
  if (sp != std::string_view::npos) {
    std::string_view rest = body.substr(sp);
    skip_space(rest);
    if (!rest.empty()) {
      for (auto text : split_operands(rest)) {
        Operand o = Operand::parse(text);
        if (o.kind == OperandKind::Opaque)
          out.warnings.push_back("unrecognised operand '" + o.raw + "' kept verbatim");
        ops.push_back(std::move(o));
      }
    }
  }

  out.kind = LineKind::Instruction;
  out.instr.emplace(control, pred, std::string(mnemonic), std::move(ops), std::string(line),
                    line_no);
  return out;
}

}  // namespace

ParseResult parse_kernel(std::string_view text, std::string name) {
  ParseResult result;
  std::string norm = normalize_newlines(text);
  std::string_view all = norm;

  bool trailing_newline = !all.empty() && all.back() == '\n';
  if (trailing_newline) all.remove_suffix(1);

  std::vector<Kernel::InstrPtr> schedule;
  std::vector<std::vector<std::string>> gaps(1);
  bool in_block_comment = false;
  bool any_error = false;

  if (!norm.empty()) {
    std::size_t start = 0;
    int line_no = 0;
    while (start <= all.size()) {
      auto nl = all.find('\n', start);
      std::string_view line =
          all.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
      ++line_no;

      if (in_block_comment) {
        if (line.find("*/") != std::string_view::npos) in_block_comment = false;
        gaps.back().emplace_back(line);
      } else {
        LineParse lp = parse_line(line, line_no);
        for (auto& w : lp.warnings)
          result.diagnostics.push_back({line_no, ParseDiagnostic::Severity::Warning, std::move(w)});
        switch (lp.kind) {
          case LineKind::Error:
            any_error = true;
            result.diagnostics.push_back({line_no, ParseDiagnostic::Severity::Error, lp.error});
            gaps.back().emplace_back(line);
            break;
          case LineKind::Instruction:
            schedule.push_back(std::make_shared<const Instruction>(std::move(*lp.instr)));
            gaps.emplace_back();
            break;
          case LineKind::Text:
            gaps.back().emplace_back(line);
            in_block_comment = lp.opens_block_comment;
            break;
        }
      }

      if (nl == std::string_view::npos) break;
      start = nl + 1;
    }
  }

  if (!any_error)
    result.kernel.emplace(std::move(name), std::move(schedule), std::move(gaps), trailing_newline);
  return result;
}

std::string serialize_kernel(const Kernel& k) {
  std::string out;
  bool first = true;
  auto emit = [&](const std::string& line) {
    if (!first) out += '\n';
    out += line;
    first = false;
  };
  const auto& gaps = k.interleaved_text();
  for (std::size_t i = 0; i < k.size(); ++i) {
    for (const auto& line : gaps[i]) emit(line);
    emit(k[i].text());
  }
  for (const auto& line : gaps.back()) emit(line);
  if (!first && k.trailing_newline()) out += '\n';
  return out;
}

Instruction Instruction::from_text(std::string_view line) {
  LineParse lp = parse_line(line, 0);
  if (lp.kind == LineKind::Error) throw std::invalid_argument(lp.error);
  if (lp.kind != LineKind::Instruction)
    throw std::invalid_argument("not an instruction: '" + std::string(line) + "'");
  const Instruction& i = *lp.instr;
  // Drop source provenance so text() renders canonically.
  return Instruction(i.control(), i.predicate(), i.mnemonic(), i.operands());
}

}  // namespace sassopt
