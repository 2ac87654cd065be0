#include "ztcsense/netlist.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>

#include "ztcsense/errors.hpp"

namespace ztcsense {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t terminal_count(DeviceKind kind) { return kind == DeviceKind::Mosfet ? 4 : 2; }

}  // namespace

std::string canonical_node(std::string_view name) {
  std::string n = lower(name);
  if (n == "gnd") return "0";
  return n;
}

// ---------------------------------------------------------------- Circuit

Circuit::Circuit() : nodes_{"0"} {}

std::optional<std::size_t> Circuit::node_index(std::string_view name) const {
  const std::string key = canonical_node(name);
  auto it = std::find(nodes_.begin(), nodes_.end(), key);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::optional<std::size_t> Circuit::device_index(std::string_view name) const {
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    if (iequals(devices_[i].name, name)) return i;
  }
  return std::nullopt;
}

const Device& Circuit::device(std::string_view name) const {
  auto idx = device_index(name);
  if (!idx) throw TopologyError("no device named '" + std::string(name) + "'");
  return devices_[*idx];
}

const ModelCard& Circuit::model_for(const Device& mosfet) const {
  auto it = models_.find(mosfet.model);
  if (it == models_.end()) {
    throw SemanticError("device '" + mosfet.name + "': unknown model '" + mosfet.model + "'");
  }
  return it->second;
}

std::size_t Circuit::mosfet_count() const {
  return static_cast<std::size_t>(std::count_if(devices_.begin(), devices_.end(), [](const Device& d) {
    return d.kind == DeviceKind::Mosfet;
  }));
}

void Circuit::add_model(ModelCard card) {
  card.name = lower(card.name);
  if (card.name.empty()) throw SemanticError("model name must not be empty");
  validate(card);
  if (models_.count(card.name)) throw SemanticError("duplicate model '" + card.name + "'");
  models_.emplace(card.name, std::move(card));
}

void Circuit::set_model(ModelCard card) {
  card.name = lower(card.name);
  validate(card);
  auto it = models_.find(card.name);
  if (it == models_.end()) throw SemanticError("unknown model '" + card.name + "'");
  it->second = std::move(card);
}

void Circuit::set_temperature(double kelvin) {
  if (!(kelvin >= kMinTemperature && kelvin <= kMaxTemperature)) {
    throw SemanticError("temperature " + format_double(kelvin) + " K outside [200 K, 450 K]");
  }
  temperature_ = kelvin;
}

std::string Circuit::intern_node(std::string name) {
  std::string key = canonical_node(name);
  if (std::find(nodes_.begin(), nodes_.end(), key) == nodes_.end()) nodes_.push_back(key);
  return key;
}

void Circuit::validate_device(const Device& d) const {
  if (d.name.empty()) throw SemanticError("device name must not be empty");
  static constexpr char kLetters[] = {'m', 'r', 'c', 'v'};
  if (std::tolower(static_cast<unsigned char>(d.name.front())) != kLetters[static_cast<int>(d.kind)]) {
    throw SemanticError("device '" + d.name + "': name must start with its element letter");
  }
  for (const auto& t : d.terminals) {
    if (t.empty() || t.find_first_of("()= \t\n*+") != std::string::npos) {
      throw SemanticError("device '" + d.name + "': invalid node name '" + t + "'");
    }
  }
  if (d.terminals.size() != terminal_count(d.kind)) {
    throw SemanticError("device '" + d.name + "': wrong terminal count");
  }
  switch (d.kind) {
    case DeviceKind::Mosfet:
      if (!(d.width > 0.0) || !(d.length > 0.0) || !std::isfinite(d.width) ||
          !std::isfinite(d.length)) {
        throw SemanticError("device '" + d.name + "': W and L must be positive");
      }
      if (!models_.count(d.model)) {
        throw SemanticError("device '" + d.name + "': unknown model '" + d.model + "'");
      }
      break;
    case DeviceKind::Resistor:
      if (!(d.value > 0.0) || !std::isfinite(d.value)) {
        throw SemanticError("device '" + d.name + "': resistance must be positive");
      }
      break;
    case DeviceKind::Capacitor:
      if (!(d.value >= 0.0) || !std::isfinite(d.value)) {
        throw SemanticError("device '" + d.name + "': capacitance must be non-negative");
      }
      break;
    case DeviceKind::VoltageSource:
      for (std::size_t i = 1; i < d.waveform.pwl.size(); ++i) {
        if (!(d.waveform.pwl[i].time > d.waveform.pwl[i - 1].time)) {
          throw SemanticError("source '" + d.name + "': PWL times must be strictly increasing");
        }
      }
      break;
  }
}

Device& Circuit::add_device(Device device) {
  if (device.kind == DeviceKind::Mosfet) device.model = lower(device.model);
  validate_device(device);
  if (device_index(device.name)) {
    throw SemanticError("duplicate device name '" + device.name + "'");
  }
  for (auto& t : device.terminals) t = intern_node(t);
  devices_.push_back(std::move(device));
  return devices_.back();
}

void Circuit::add_mosfet(std::string name, std::string drain, std::string gate, std::string source,
                         std::string bulk, std::string model, double width, double length) {
  Device d;
  d.name = std::move(name);
  d.kind = DeviceKind::Mosfet;
  d.terminals = {std::move(drain), std::move(gate), std::move(source), std::move(bulk)};
  d.model = std::move(model);
  d.width = width;
  d.length = length;
  add_device(std::move(d));
}

void Circuit::add_resistor(std::string name, std::string n1, std::string n2, double ohms) {
  Device d;
  d.name = std::move(name);
  d.kind = DeviceKind::Resistor;
  d.terminals = {std::move(n1), std::move(n2)};
  d.value = ohms;
  add_device(std::move(d));
}

void Circuit::add_capacitor(std::string name, std::string n1, std::string n2, double farads) {
  Device d;
  d.name = std::move(name);
  d.kind = DeviceKind::Capacitor;
  d.terminals = {std::move(n1), std::move(n2)};
  d.value = farads;
  add_device(std::move(d));
}

void Circuit::add_voltage_source(std::string name, std::string positive, std::string negative,
                                 Waveform waveform) {
  Device d;
  d.name = std::move(name);
  d.kind = DeviceKind::VoltageSource;
  d.terminals = {std::move(positive), std::move(negative)};
  d.waveform = std::move(waveform);
  add_device(std::move(d));
}

void Circuit::set_waveform(std::string_view source_name, Waveform waveform) {
  auto idx = device_index(source_name);
  if (!idx || devices_[*idx].kind != DeviceKind::VoltageSource) {
    throw TopologyError("no voltage source named '" + std::string(source_name) + "'");
  }
  Device updated = devices_[*idx];
  updated.waveform = std::move(waveform);
  validate_device(updated);
  devices_[*idx] = std::move(updated);
}

void Circuit::reconnect(std::string_view device_name, std::size_t terminal, std::string node) {
  auto idx = device_index(device_name);
  if (!idx) throw TopologyError("no device named '" + std::string(device_name) + "'");
  if (terminal >= devices_[*idx].terminals.size()) {
    throw TopologyError("device '" + std::string(device_name) + "' has no such terminal");
  }
  devices_[*idx].terminals[terminal] = canonical_node(node);
  // Keep node order equal to first appearance so serialization round-trips.
  std::vector<std::string> order{"0"};
  for (const auto& d : devices_) {
    for (const auto& t : d.terminals) {
      if (std::find(order.begin(), order.end(), t) == order.end()) order.push_back(t);
    }
  }
  nodes_ = std::move(order);
}

// ---------------------------------------------------------------- values

std::optional<double> parse_value(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  std::string mantissa;
  if (i < n && (text[i] == '+' || text[i] == '-')) mantissa.push_back(text[i++]);
  std::size_t digits = 0;
  while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
    mantissa.push_back(text[i++]);
    ++digits;
  }
  if (i < n && text[i] == '.') {
    mantissa.push_back(text[i++]);
    while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) {
      mantissa.push_back(text[i++]);
      ++digits;
    }
  }
  if (digits == 0) return std::nullopt;

  long exponent = 0;
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    std::size_t j = i + 1;
    bool negative = false;
    if (j < n && (text[j] == '+' || text[j] == '-')) negative = text[j++] == '-';
    std::size_t start = j;
    long e = 0;
    while (j < n && std::isdigit(static_cast<unsigned char>(text[j]))) {
      if (e < 100000) e = e * 10 + (text[j] - '0');
      ++j;
    }
    if (j == start) return std::nullopt;
    exponent = negative ? -e : e;
    i = j;
  }

  const std::string suffix = lower(text.substr(i));
  if (suffix == "meg") {
    exponent += 6;
  } else if (suffix.size() == 1) {
    switch (suffix[0]) {
      case 'f': exponent -= 15; break;
      case 'p': exponent -= 12; break;
      case 'n': exponent -= 9; break;
      case 'u': exponent -= 6; break;
      case 'm': exponent -= 3; break;
      case 'k': exponent += 3; break;
      case 'g': exponent += 9; break;
      case 't': exponent += 12; break;
      default: return std::nullopt;
    }
  } else if (!suffix.empty()) {
    return std::nullopt;
  }

  // Re-assemble as a plain decimal so the conversion is correctly rounded.
  const std::string literal = mantissa + "e" + std::to_string(exponent);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), value);
  if (ec != std::errc() || ptr != literal.data() + literal.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// ---------------------------------------------------------------- parser

namespace {

struct Token {
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

using Statement = std::vector<Token>;

std::vector<Statement> split_statements(std::string_view text) {
  std::vector<Statement> statements;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool ended = false;
  while (pos <= text.size() && !ended) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    std::size_t first = 0;
    while (first < line.size() && std::isspace(static_cast<unsigned char>(line[first]))) ++first;
    if (first == line.size()) {
      if (eol == text.size()) break;
      continue;
    }
    if (line[first] == '*') continue;

    bool continuation = false;
    std::size_t start = first;
    if (line[first] == '+') {
      if (statements.empty()) throw SyntaxError(line_no, first + 1, "continuation without a statement");
      continuation = true;
      ++start;
    }

    Statement tokens;
    std::size_t i = start;
    while (i < line.size()) {
      const char c = line[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (c == '(' || c == ')' || c == '=') {
        tokens.push_back({std::string(1, c), line_no, i + 1});
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) &&
             line[j] != '(' && line[j] != ')' && line[j] != '=') {
        ++j;
      }
      tokens.push_back({std::string(line.substr(i, j - i)), line_no, i + 1});
      i = j;
    }

    if (continuation) {
      auto& prev = statements.back();
      prev.insert(prev.end(), tokens.begin(), tokens.end());
    } else if (!tokens.empty()) {
      if (iequals(tokens.front().text, ".end")) {
        if (tokens.size() != 1) throw SyntaxError(tokens[1].line, tokens[1].column, "unexpected token after .END");
        ended = true;
      } else {
        statements.push_back(std::move(tokens));
      }
    }
    if (eol == text.size()) break;
  }
  return statements;
}

class StatementReader {
 public:
  explicit StatementReader(const Statement& s) : s_(s) {}

  bool done() const { return i_ >= s_.size(); }
  const Token& peek() const { return s_[i_]; }

  const Token& next(const char* what) {
    if (done()) {
      const Token& last = s_.back();
      throw SyntaxError(last.line, last.column + last.text.size(), std::string("expected ") + what);
    }
    return s_[i_++];
  }

  std::string node(const char* what) {
    const Token& t = next(what);
    if (t.text == "(" || t.text == ")" || t.text == "=") {
      throw SyntaxError(t.line, t.column, std::string("expected ") + what);
    }
    return t.text;
  }

  double value(const char* what) {
    const Token& t = next(what);
    auto v = parse_value(t.text);
    if (!v) throw SyntaxError(t.line, t.column, "invalid numeric value '" + t.text + "' for " + what);
    return *v;
  }

  void expect(std::string_view literal) {
    const Token& t = next(std::string(literal).c_str());
    if (!iequals(t.text, literal)) {
      throw SyntaxError(t.line, t.column, "expected '" + std::string(literal) + "', found '" + t.text + "'");
    }
  }

  void finish() const {
    if (!done()) throw SyntaxError(peek().line, peek().column, "unexpected token '" + peek().text + "'");
  }

  // key = value
  std::pair<const Token*, double> assignment() {
    const Token& key = next("parameter name");
    expect("=");
    double v = value(key.text.c_str());
    return {&key, v};
  }

 private:
  const Statement& s_;
  std::size_t i_ = 0;
};

struct PendingMosfet {
  Device device;
  Token model_token;
};

ModelCard parse_model(const Statement& s) {
  StatementReader r(s);
  r.next(".MODEL");
  ModelCard card;
  card.name = lower(r.node("model name"));
  const Token& type = r.next("NMOS or PMOS");
  if (iequals(type.text, "nmos")) {
    card.polarity = Polarity::N;
  } else if (iequals(type.text, "pmos")) {
    card.polarity = Polarity::P;
  } else {
    throw SemanticError(type.line, type.column, "unsupported model type '" + type.text + "'");
  }
  r.expect("(");
  std::set<std::string> seen;
  double vto = card.vth0;
  bool have_vto = false;
  while (!r.done() && r.peek().text != ")") {
    auto [key, v] = r.assignment();
    const std::string k = lower(key->text);
    if (!seen.insert(k).second) throw SemanticError(key->line, key->column, "duplicate parameter " + key->text);
    if (k == "vto") {
      vto = v;
      have_vto = true;
    } else if (k == "kp") {
      card.kp = v;
    } else if (k == "lambda") {
      card.lambda = v;
    } else if (k == "tcv") {
      card.tcv = v;
    } else if (k == "bex") {
      card.bex = v;
    } else if (k == "cgs") {
      card.cgs = v;
    } else if (k == "cgd") {
      card.cgd = v;
    } else {
      throw SemanticError(key->line, key->column, "unsupported model parameter " + key->text);
    }
  }
  r.expect(")");
  r.finish();
  if (have_vto) card.vth0 = card.polarity == Polarity::P ? -vto : vto;
  try {
    validate(card);
  } catch (const SemanticError& e) {
    throw SemanticError(s.front().line, s.front().column, e.what());
  }
  return card;
}

Device parse_source(const Statement& s) {
  StatementReader r(s);
  Device d;
  d.kind = DeviceKind::VoltageSource;
  d.name = r.next("name").text;
  d.terminals = {r.node("positive node"), r.node("negative node")};
  r.expect("DC");
  d.waveform.dc = r.value("DC value");
  bool have_pwl = false;
  bool have_ac = false;
  while (!r.done()) {
    const Token& kw = r.next("PWL or AC");
    if (iequals(kw.text, "pwl") && !have_pwl) {
      have_pwl = true;
      r.expect("(");
      std::vector<double> values;
      while (!r.done() && r.peek().text != ")") values.push_back(r.value("PWL entry"));
      const Token& close = r.next("')'");
      if (close.text != ")") throw SyntaxError(close.line, close.column, "expected ')'");
      if (values.empty() || values.size() % 2 != 0) {
        throw SyntaxError(kw.line, kw.column, "PWL needs time/value pairs");
      }
      for (std::size_t i = 0; i < values.size(); i += 2) {
        d.waveform.pwl.push_back({values[i], values[i + 1]});
      }
      for (std::size_t i = 1; i < d.waveform.pwl.size(); ++i) {
        if (!(d.waveform.pwl[i].time > d.waveform.pwl[i - 1].time)) {
          throw SemanticError(kw.line, kw.column, "PWL times must be strictly increasing");
        }
      }
    } else if (iequals(kw.text, "ac") && !have_ac) {
      have_ac = true;
      const Token& t = r.peek();
      double mag = r.value("AC magnitude");
      if (mag < 0.0) throw SemanticError(t.line, t.column, "AC magnitude must be non-negative");
      d.waveform.ac_magnitude = mag;
    } else {
      throw SyntaxError(kw.line, kw.column, "unexpected token '" + kw.text + "'");
    }
  }
  return d;
}

PendingMosfet parse_mosfet(const Statement& s) {
  StatementReader r(s);
  PendingMosfet p;
  Device& d = p.device;
  d.kind = DeviceKind::Mosfet;
  d.name = r.next("name").text;
  d.terminals = {r.node("drain node"), r.node("gate node"), r.node("source node"), r.node("bulk node")};
  p.model_token = r.next("model name");
  d.model = lower(p.model_token.text);
  bool have_w = false;
  bool have_l = false;
  while (!r.done()) {
    auto [key, v] = r.assignment();
    if (iequals(key->text, "w") && !have_w) {
      have_w = true;
      d.width = v;
    } else if (iequals(key->text, "l") && !have_l) {
      have_l = true;
      d.length = v;
    } else {
      throw SemanticError(key->line, key->column, "unsupported MOSFET parameter " + key->text);
    }
  }
  if (!have_w || !have_l) {
    throw SyntaxError(s.front().line, s.front().column, "MOSFET requires W= and L=");
  }
  if (!(d.width > 0.0) || !(d.length > 0.0)) {
    throw SemanticError(s.front().line, s.front().column, "non-positive MOSFET geometry");
  }
  return p;
}

Device parse_two_terminal(const Statement& s, DeviceKind kind) {
  StatementReader r(s);
  Device d;
  d.kind = kind;
  d.name = r.next("name").text;
  d.terminals = {r.node("node"), r.node("node")};
  const Token& vt = r.peek();
  d.value = r.value(kind == DeviceKind::Resistor ? "resistance" : "capacitance");
  r.finish();
  if (kind == DeviceKind::Resistor && !(d.value > 0.0)) {
    throw SemanticError(vt.line, vt.column, "resistance must be positive");
  }
  if (kind == DeviceKind::Capacitor && !(d.value >= 0.0)) {
    throw SemanticError(vt.line, vt.column, "capacitance must be non-negative");
  }
  return d;
}

}  // namespace

Circuit parse_netlist(std::string_view text) {
  const auto statements = split_statements(text);

  Circuit circuit;
  // Models first: a MOSFET may reference a card declared further down.
  for (const auto& s : statements) {
    if (iequals(s.front().text, ".model")) {
      ModelCard card = parse_model(s);
      if (circuit.model_cards().count(card.name)) {
        throw SemanticError(s.front().line, s.front().column, "duplicate model '" + card.name + "'");
      }
      circuit.add_model(std::move(card));
    }
  }

  bool have_temp = false;
  for (const auto& s : statements) {
    const Token& head = s.front();
    const std::string h = lower(head.text);
    if (h == ".model") continue;
    if (h == ".temp") {
      StatementReader r(s);
      r.next(".TEMP");
      const Token& vt = r.peek();
      const double celsius = r.value("temperature");
      r.finish();
      if (have_temp) throw SemanticError(head.line, head.column, "duplicate .TEMP");
      have_temp = true;
      try {
        circuit.set_temperature(celsius + kZeroCelsius);
      } catch (const SemanticError& e) {
        throw SemanticError(vt.line, vt.column, e.what());
      }
      continue;
    }
    if (h.front() == '.') {
      throw SemanticError(head.line, head.column, "unsupported control card '" + head.text + "'");
    }

    Device device;
    const Token* model_token = nullptr;
    PendingMosfet pending;
    switch (h.front()) {
      case 'm':
        pending = parse_mosfet(s);
        device = std::move(pending.device);
        model_token = &pending.model_token;
        break;
      case 'r':
        device = parse_two_terminal(s, DeviceKind::Resistor);
        break;
      case 'c':
        device = parse_two_terminal(s, DeviceKind::Capacitor);
        break;
      case 'v':
        device = parse_source(s);
        break;
      default:
        throw SemanticError(head.line, head.column, "unsupported element '" + head.text + "'");
    }
    if (circuit.device_index(device.name)) {
      throw SemanticError(head.line, head.column, "duplicate device name '" + device.name + "'");
    }
    if (model_token && !circuit.model_cards().count(device.model)) {
      throw SemanticError(model_token->line, model_token->column,
                          "unknown model '" + model_token->text + "'");
    }
    try {
      circuit.add_device(std::move(device));
    } catch (const SemanticError& e) {
      throw SemanticError(head.line, head.column, e.what());
    }
  }
  return circuit;
}

std::string serialize_netlist(const Circuit& circuit) {
  std::string out;
  if (circuit.temperature() != kNominalTemperature) {
    // Pick the decimal whose parse lands exactly on the stored kelvin value.
    double celsius = circuit.temperature() - kZeroCelsius;
    for (int k = 0; k < 64 && celsius + kZeroCelsius != circuit.temperature(); ++k) {
      celsius = std::nextafter(celsius, celsius + kZeroCelsius < circuit.temperature()
                                            ? HUGE_VAL
                                            : -HUGE_VAL);
    }
    out += ".TEMP " + format_double(celsius) + "\n";
  }
  for (const auto& [name, card] : circuit.model_cards()) {
    const double vto = card.polarity == Polarity::P ? -card.vth0 : card.vth0;
    out += ".MODEL " + name + (card.polarity == Polarity::P ? " PMOS" : " NMOS") + " (VTO=" +
           format_double(vto) + " KP=" + format_double(card.kp) +
           " LAMBDA=" + format_double(card.lambda) + " TCV=" + format_double(card.tcv) +
           " BEX=" + format_double(card.bex) + " CGS=" + format_double(card.cgs) +
           " CGD=" + format_double(card.cgd) + ")\n";
  }
  for (const auto& d : circuit.devices()) {
    out += d.name;
    for (const auto& t : d.terminals) out += " " + t;
    switch (d.kind) {
      case DeviceKind::Mosfet:
        out += " " + d.model + " W=" + format_double(d.width) + " L=" + format_double(d.length);
        break;
      case DeviceKind::Resistor:
      case DeviceKind::Capacitor:
        out += " " + format_double(d.value);
        break;
      case DeviceKind::VoltageSource:
        out += " DC " + format_double(d.waveform.dc);
        if (d.waveform.has_pwl()) {
          out += " PWL(";
          for (std::size_t i = 0; i < d.waveform.pwl.size(); ++i) {
            if (i) out += ' ';
            out += format_double(d.waveform.pwl[i].time) + " " + format_double(d.waveform.pwl[i].value);
          }
          out += ")";
        }
        if (d.waveform.ac_magnitude) out += " AC " + format_double(*d.waveform.ac_magnitude);
        break;
    }
    out += "\n";
  }
  out += ".END\n";
  return out;
}

}  // namespace ztcsense
