#include "ztcsense/devices.hpp"

#include <cctype>
#include <cmath>
#include <string>

#include "ztcsense/errors.hpp"

namespace ztcsense {

namespace {

void check_temperature(double temperature) {
  if (!(temperature >= kMinTemperature && temperature <= kMaxTemperature)) {
    throw RangeError("temperature " + std::to_string(temperature) +
                     " K outside supported window [200 K, 450 K]");
  }
}

// n-frame evaluation; vds >= 0.
MosfetOperatingPoint square_law(double beta, double vth, double lambda, double vgs, double vds) {
  MosfetOperatingPoint op;
  const double vov = vgs - vth;
  if (vov <= 0.0) return op;
  const double clm = 1.0 + lambda * vds;
  if (vds < vov) {
    const double core = vov * vds - 0.5 * vds * vds;
    op.id = beta * core * clm;
    op.gm = beta * vds * clm;
    op.gds = beta * ((vov - vds) * clm + lambda * core);
  } else {
    const double core = 0.5 * vov * vov;
    op.id = beta * core * clm;
    op.gm = beta * vov * clm;
    op.gds = beta * core * lambda;
  }
  return op;
}

}  // namespace

void validate(const ModelCard& card) {
  auto fail = [&](const char* what) {
    throw SemanticError("model '" + card.name + "': " + what);
  };
  if (!(card.kp > 0.0)) fail("KP must be positive");
  if (!(card.bex > 0.0)) fail("BEX must be positive");
  if (!(card.tcv >= 0.0)) fail("TCV must be non-negative");
  if (!(card.lambda >= 0.0)) fail("LAMBDA must be non-negative");
  if (!(card.cgs >= 0.0) || !(card.cgd >= 0.0)) fail("capacitances must be non-negative");
  if (!std::isfinite(card.vth0)) fail("VTO must be finite");
  if (!(card.t_nom > 0.0)) fail("nominal temperature must be positive");
}

double vth_at(const ModelCard& card, double temperature) {
  check_temperature(temperature);
  return card.vth0 - card.tcv * (temperature - card.t_nom);
}

double kp_at(const ModelCard& card, double temperature) {
  check_temperature(temperature);
  return card.kp * std::pow(temperature / card.t_nom, -card.bex);
}

MosfetOperatingPoint mosfet_current(const ModelCard& card, double w_over_l, double vgs,
                                    double vds, double temperature) {
  const double vth = vth_at(card, temperature);
  const double beta = kp_at(card, temperature) * w_over_l;
  if (card.polarity == Polarity::N) return square_law(beta, vth, card.lambda, vgs, vds);
  auto op = square_law(beta, vth, card.lambda, -vgs, -vds);
  op.id = -op.id;
  return op;
}

MosfetStamp mosfet_stamp(const ModelCard& card, double w_over_l, double vd, double vg, double vs,
                         double temperature) {
  const double sign = card.polarity == Polarity::N ? 1.0 : -1.0;
  const double vth = vth_at(card, temperature);
  const double beta = kp_at(card, temperature) * w_over_l;
  const double d = sign * vd;
  const double g = sign * vg;
  const double s = sign * vs;

  MosfetStamp st;
  if (d >= s) {
    const auto op = square_law(beta, vth, card.lambda, g - s, d - s);
    st.id = sign * op.id;
    st.d_vd = op.gds;
    st.d_vg = op.gm;
    st.d_vs = -op.gm - op.gds;
  } else {
    // Reverse bias: the drain terminal acts as source.
    const auto op = square_law(beta, vth, card.lambda, g - d, s - d);
    st.id = -sign * op.id;
    st.d_vs = -op.gds;
    st.d_vg = -op.gm;
    st.d_vd = op.gm + op.gds;
  }
  return st;
}

Corner Corner::from_label(CornerLabel label) {
  switch (label) {
    case CornerLabel::FF:
      return fast();
    case CornerLabel::SS:
      return slow();
    case CornerLabel::TT:
      break;
  }
  return typical();
}

std::string_view to_string(CornerLabel label) {
  switch (label) {
    case CornerLabel::FF:
      return "FF";
    case CornerLabel::SS:
      return "SS";
    case CornerLabel::TT:
      break;
  }
  return "TT";
}

CornerLabel parse_corner(std::string_view text) {
  std::string lower;
  for (char c : text) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "tt") return CornerLabel::TT;
  if (lower == "ff") return CornerLabel::FF;
  if (lower == "ss") return CornerLabel::SS;
  throw SpecError("unknown process corner '" + std::string(text) + "' (expected tt, ff or ss)");
}

ModelCard corner_card(const ModelCard& base, const Corner& corner) {
  ModelCard card = base;
  card.vth0 += corner.dvth;
  card.kp *= corner.kp_scale;
  return card;
}

}  // namespace ztcsense
