/*
 * Licensed to the Apache Software Foundation (ASF) under one
 * or more contributor license agreements.  See the NOTICE file
 * distributed with this work for additional information
 * regarding copyright ownership.  The ASF licenses this file
 * to you under the Apache License, Version 2.0 (the
 * "License"); you may not use this file except in compliance
 * with the License.  You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing,
 * software distributed under the License is distributed on an
 * "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
 * KIND, either express or implied.  See the License for the
 * specific language governing permissions and limitations
 * under the License.
 */

#include "gemmtune/isa.h"

#include <map>
#include <sstream>

#include "gemmtune/error.h"

namespace gemmtune {

const char* ToString(Dataflow df) { return df == Dataflow::kWS ? "WS" : "OS"; }

const char* ToString(InstrKind kind) {
  switch (kind) {
    case InstrKind::kConfigEx:
      return "config.ex";
    case InstrKind::kConfigMv:
      return "config.mv";
    case InstrKind::kMoveIn:
      return "mvin";
    case InstrKind::kMoveOut:
      return "mvout";
    case InstrKind::kPreload:
      return "preload";
    case InstrKind::kCompute:
      return "compute";
    case InstrKind::kFence:
      return "fence";
    case InstrKind::kFlush:
      return "flush";
  }
  return "?";
}

const char* ToString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kMoveLimitExceeded:
      return "MoveLimitExceeded";
    case ViolationKind::kAddressOutOfRange:
      return "AddressOutOfRange";
    case ViolationKind::kBigMvoutUnsupported:
      return "BigMvoutUnsupported";
    case ViolationKind::kDataflowUnsupported:
      return "DataflowUnsupported";
    case ViolationKind::kConfigMissing:
      return "ConfigMissing";
    case ViolationKind::kWrongAddressSpace:
      return "WrongAddressSpace";
    case ViolationKind::kBadShape:
      return "BadShape";
  }
  return "?";
}

std::string ToString(const Workload& w) {
  return std::to_string(w.m) + "x" + std::to_string(w.n) + "x" + std::to_string(w.k);
}

namespace {

/*! \brief Walks a trace in program order and records violations. */
class LegalityChecker {
 public:
  LegalityChecker(const AcceleratorConfig& cfg, std::vector<Violation>* out) : cfg_(cfg), out_(out) {}

  void Check(size_t idx, const Instruction& inst) {
    idx_ = idx;
    std::visit([this](const auto& i) { Visit(i); }, inst);
  }

 private:
  void Flag(ViolationKind kind) { out_->push_back({idx_, kind}); }

  void CheckRange(const LocalAddr& addr, int64_t span) {
    int64_t limit = addr.accumulator ? cfg_.acc_rows() : cfg_.sp_rows();
    if (addr.row < 0 || span < 0 || addr.row + span > limit) Flag(ViolationKind::kAddressOutOfRange);
  }

  void CheckMoveShape(int64_t rows, int64_t cols) {
    if (rows < 1 || cols < 1) {
      Flag(ViolationKind::kBadShape);
      return;
    }
    if (rows > cfg_.max_mv_rows || cols > cfg_.max_mv_cols) Flag(ViolationKind::kMoveLimitExceeded);
  }

  void Visit(const ConfigEx& c) {
    seen_ex_ = true;
    if ((c.dataflow == Dataflow::kWS && !cfg_.supports_ws) ||
        (c.dataflow == Dataflow::kOS && !cfg_.supports_os)) {
      Flag(ViolationKind::kDataflowUnsupported);
    }
  }

  void Visit(const ConfigMv& c) {
    if (c.stride_bytes < 0 || c.scale.num() <= 0) Flag(ViolationKind::kBadShape);
    if (c.direction == MoveDirection::kIn) {
      seen_mv_in_ = true;
    } else {
      seen_mv_out_ = true;
    }
  }

  void Visit(const MoveIn& m) {
    if (!seen_mv_in_) Flag(ViolationKind::kConfigMissing);
    CheckMoveShape(m.rows, m.cols);
    CheckRange(m.dst, PatchRowSpan(m.rows, m.cols, cfg_.dim));
  }

  void Visit(const MoveOut& m) {
    if (!seen_mv_out_) Flag(ViolationKind::kConfigMissing);
    if (!m.src.accumulator) Flag(ViolationKind::kWrongAddressSpace);
    CheckMoveShape(m.rows, m.cols);
    if ((m.rows > cfg_.dim || m.cols > cfg_.dim) && !cfg_.supports_big_mvout) {
      Flag(ViolationKind::kBigMvoutUnsupported);
    }
    CheckRange(m.src, PatchRowSpan(m.rows, m.cols, cfg_.dim));
  }

  void Visit(const Preload& p) {
    if (!seen_ex_) Flag(ViolationKind::kConfigMissing);
    if (p.b.accumulator || !p.c.accumulator) Flag(ViolationKind::kWrongAddressSpace);
    if (p.rows < 1 || p.cols < 1 || p.rows > cfg_.dim || p.cols > cfg_.dim) {
      Flag(ViolationKind::kBadShape);
    }
    CheckRange(p.b, p.rows);
    CheckRange(p.c, 1);
    preload_ = p;
  }

  void Visit(const Compute& c) {
    if (!seen_ex_) Flag(ViolationKind::kConfigMissing);
    if (c.a.accumulator) Flag(ViolationKind::kWrongAddressSpace);
    if (!preload_ || c.rows < 1 || c.cols < 1 || c.rows > cfg_.dim || c.cols > cfg_.dim ||
        c.cols != preload_->rows) {
      Flag(ViolationKind::kBadShape);
    }
    CheckRange(c.a, c.rows);
    if (c.d) CheckRange(*c.d, c.rows);
    if (preload_) CheckRange(preload_->c, c.rows);
  }

  void Visit(const Fence&) {}
  void Visit(const Flush&) {}

  const AcceleratorConfig& cfg_;
  std::vector<Violation>* out_;
  size_t idx_{0};
  bool seen_ex_{false};
  bool seen_mv_in_{false};
  bool seen_mv_out_{false};
  std::optional<Preload> preload_;
};

std::string Addr(const LocalAddr& a) {
  return std::string(a.accumulator ? "acc:" : "sp:") + std::to_string(a.row);
}

LocalAddr ParseAddr(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos) throw ParseError("bad address '" + s + "'");
  std::string space = s.substr(0, colon);
  LocalAddr a;
  if (space == "acc") {
    a.accumulator = true;
  } else if (space != "sp") {
    throw ParseError("bad address space '" + space + "'");
  }
  a.row = std::stoll(s.substr(colon + 1));
  return a;
}

}  // namespace

std::vector<Violation> CheckLegality(const InstructionTrace& trace, const AcceleratorConfig& cfg) {
  std::vector<Violation> out;
  LegalityChecker checker(cfg, &out);
  for (size_t i = 0; i < trace.instructions.size(); ++i) checker.Check(i, trace.instructions[i]);
  return out;
}

std::string RenderInstruction(const Instruction& inst) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& i) {
        using T = std::decay_t<decltype(i)>;
        if constexpr (std::is_same_v<T, ConfigEx>) {
          os << "config.ex dataflow=" << ToString(i.dataflow) << " scale=" << i.out_scale.ToString();
        } else if constexpr (std::is_same_v<T, ConfigMv>) {
          os << "config.mv dir=" << (i.direction == MoveDirection::kIn ? "in" : "out")
             << " stride=" << i.stride_bytes << " scale=" << i.scale.ToString();
        } else if constexpr (std::is_same_v<T, MoveIn>) {
          os << "mvin dram=" << i.dram_addr << " dst=" << Addr(i.dst) << " rows=" << i.rows
             << " cols=" << i.cols;
        } else if constexpr (std::is_same_v<T, MoveOut>) {
          os << "mvout dram=" << i.dram_addr << " src=" << Addr(i.src) << " rows=" << i.rows
             << " cols=" << i.cols;
        } else if constexpr (std::is_same_v<T, Preload>) {
          os << "preload b=" << Addr(i.b) << " c=" << Addr(i.c) << " rows=" << i.rows
             << " cols=" << i.cols;
        } else if constexpr (std::is_same_v<T, Compute>) {
          os << "compute a=" << Addr(i.a) << " d=" << (i.d ? Addr(*i.d) : std::string("none"))
             << " rows=" << i.rows << " cols=" << i.cols << " accumulate=" << (i.accumulate ? 1 : 0);
        } else if constexpr (std::is_same_v<T, Fence>) {
          os << "fence";
        } else {
          os << "flush";
        }
      },
      inst);
  return os.str();
}

std::string RenderTrace(const InstructionTrace& trace) {
  std::string out;
  for (const auto& inst : trace.instructions) {
    out += RenderInstruction(inst);
    out += '\n';
  }
  return out;
}

Instruction ParseInstruction(const std::string& line) {
  std::istringstream is(line);
  std::string op;
  is >> op;
  std::map<std::string, std::string> kv;
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) throw ParseError("bad token '" + tok + "' in '" + line + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError(std::string("missing '") + key + "' in '" + line + "'");
    return it->second;
  };
  auto num = [&](const char* key) -> int64_t {
    try {
      return std::stoll(get(key));
    } catch (const std::logic_error&) {
      throw ParseError(std::string("bad number for '") + key + "' in '" + line + "'");
    }
  };
  try {
    if (op == "config.ex") {
      const std::string& df = get("dataflow");
      if (df != "WS" && df != "OS") throw ParseError("bad dataflow '" + df + "'");
      return ConfigEx{df == "WS" ? Dataflow::kWS : Dataflow::kOS, Rational::Parse(get("scale"))};
    }
    if (op == "config.mv") {
      const std::string& dir = get("dir");
      if (dir != "in" && dir != "out") throw ParseError("bad direction '" + dir + "'");
      return ConfigMv{dir == "in" ? MoveDirection::kIn : MoveDirection::kOut, num("stride"),
                      Rational::Parse(get("scale"))};
    }
    if (op == "mvin") {
      return MoveIn{static_cast<uint64_t>(num("dram")), ParseAddr(get("dst")), num("rows"),
                    num("cols")};
    }
    if (op == "mvout") {
      return MoveOut{static_cast<uint64_t>(num("dram")), ParseAddr(get("src")), num("rows"),
                     num("cols")};
    }
    if (op == "preload") {
      return Preload{ParseAddr(get("b")), ParseAddr(get("c")), num("rows"), num("cols")};
    }
    if (op == "compute") {
      Compute c;
      c.a = ParseAddr(get("a"));
      const std::string& d = get("d");
      if (d != "none") c.d = ParseAddr(d);
      c.rows = num("rows");
      c.cols = num("cols");
      c.accumulate = num("accumulate") != 0;
      return c;
    }
    if (op == "fence") return Fence{};
    if (op == "flush") return Flush{};
  } catch (const std::logic_error&) {
    throw ParseError("bad instruction '" + line + "'");
  }
  throw ParseError("unknown instruction '" + line + "'");
}

std::string RenderListing(const InstructionTrace& trace) {
  std::ostringstream os;
  const auto& w = trace.meta.workload;
  os << "# workload m=" << w.m << " n=" << w.n << " k=" << w.k << "\n";
  os << "# generator " << trace.meta.generator << "\n";
  os << "# schedule " << (trace.meta.schedule_hash.empty() ? "-" : trace.meta.schedule_hash) << "\n";
  os << RenderTrace(trace);
  return os.str();
}

InstructionTrace ParseListing(const std::string& text) {
  InstructionTrace trace;
  std::istringstream is(text);
  std::string line;
  bool have_workload = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      hs >> key;
      if (key == "workload") {
        std::string tok;
        while (hs >> tok) {
          auto eq = tok.find('=');
          if (eq == std::string::npos) throw ParseError("bad workload header '" + line + "'");
          int64_t v = std::stoll(tok.substr(eq + 1));
          std::string name = tok.substr(0, eq);
          if (name == "m") trace.meta.workload.m = v;
          if (name == "n") trace.meta.workload.n = v;
          if (name == "k") trace.meta.workload.k = v;
        }
        have_workload = true;
      } else if (key == "generator") {
        hs >> trace.meta.generator;
      } else if (key == "schedule") {
        hs >> trace.meta.schedule_hash;
        if (trace.meta.schedule_hash == "-") trace.meta.schedule_hash.clear();
      }
      continue;
    }
    trace.instructions.push_back(ParseInstruction(line));
  }
  if (!have_workload) throw ParseError("listing has no '# workload' header");
  return trace;
}

}  // namespace gemmtune
