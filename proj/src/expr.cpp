#include "lrom/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <vector>

namespace lrom::expr {

namespace {

struct Token {
    enum class Kind { Number, Mu, X, Y, Plus, Minus, Star, Caret } kind;
    double value = 0.0;  // Number
    Index index = 0;     // Mu
};

std::vector<Token> tokenize(const std::string& text, bool allow_xy) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '+') {
            tokens.push_back({Token::Kind::Plus});
            ++i;
        } else if (c == '-') {
            tokens.push_back({Token::Kind::Minus});
            ++i;
        } else if (c == '*') {
            tokens.push_back({Token::Kind::Star});
            ++i;
        } else if (c == '^') {
            tokens.push_back({Token::Kind::Caret});
            ++i;
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            char* end = nullptr;
            const double v = std::strtod(text.c_str() + i, &end);
            if (end == text.c_str() + i) {
                throw config_error("expression: bad number in '" + text + "'");
            }
            tokens.push_back({Token::Kind::Number, v});
            i = static_cast<std::size_t>(end - text.c_str());
        } else if (text.compare(i, 2, "mu") == 0) {
            std::size_t j = i + 2;
            Index idx = 0;
            bool any = false;
            while (j < text.size() &&
                   std::isdigit(static_cast<unsigned char>(text[j]))) {
                idx = idx * 10 + (text[j] - '0');
                ++j;
                any = true;
            }
            if (!any) {
                throw config_error("expression: 'mu' needs an index in '" +
                                   text + "'");
            }
            Token t{Token::Kind::Mu};
            t.index = idx;
            tokens.push_back(t);
            i = j;
        } else if (allow_xy && (c == 'x' || c == 'y')) {
            tokens.push_back({c == 'x' ? Token::Kind::X : Token::Kind::Y});
            ++i;
        } else {
            throw config_error("expression: unexpected character '" +
                               std::string(1, c) + "' in '" + text + "'");
        }
    }
    return tokens;
}

// Splits a token stream into signed terms (factor lists between +/-).
struct Term {
    double sign = 1.0;
    std::vector<Token> factors;
};

std::vector<Term> split_terms(const std::vector<Token>& tokens,
                              const std::string& text) {
    std::vector<Term> terms;
    Term current;
    bool expect_factor = true;
    for (const Token& t : tokens) {
        if (t.kind == Token::Kind::Plus || t.kind == Token::Kind::Minus) {
            if (expect_factor) {  // leading or repeated sign
                if (t.kind == Token::Kind::Minus) current.sign = -current.sign;
                continue;
            }
            terms.push_back(std::move(current));
            current = Term{};
            if (t.kind == Token::Kind::Minus) current.sign = -1.0;
            expect_factor = true;
        } else if (t.kind == Token::Kind::Star) {
            if (expect_factor) {
                throw config_error("expression: misplaced '*' in '" + text +
                                   "'");
            }
            expect_factor = true;
        } else {
            current.factors.push_back(t);
            expect_factor = false;
        }
    }
    if (expect_factor) {
        throw config_error("expression: empty or ends in an operator: '" +
                           text + "'");
    }
    terms.push_back(std::move(current));
    return terms;
}

}  // namespace

geometry::AffineExpr parse_affine(const std::string& text, Index n_params) {
    const auto terms = split_terms(tokenize(text, false), text);
    geometry::AffineExpr expr;
    expr.coeffs = Vector::Zero(n_params);
    for (const Term& term : terms) {
        double coeff = term.sign;
        Index mu_index = -1;
        for (const Token& f : term.factors) {
            if (f.kind == Token::Kind::Number) {
                coeff *= f.value;
            } else if (f.kind == Token::Kind::Mu) {
                if (mu_index >= 0) {
                    throw config_error(
                        "expression: '" + text +
                        "' is not affine (product of parameters)");
                }
                if (f.index >= n_params) {
                    throw config_error("expression: mu" +
                                       std::to_string(f.index) +
                                       " exceeds the parameter count");
                }
                mu_index = f.index;
            } else {
                throw config_error("expression: invalid factor in '" + text +
                                   "'");
            }
        }
        if (mu_index >= 0) {
            expr.coeffs[mu_index] += coeff;
        } else {
            expr.constant += coeff;
        }
    }
    return expr;
}

std::function<double(double, double)> parse_xy_poly(const std::string& text) {
    const auto terms = split_terms(tokenize(text, true), text);
    // (coefficient, x power, y power) triples
    struct Mono {
        double c;
        int px;
        int py;
    };
    std::vector<Mono> monos;
    for (const Term& term : terms) {
        Mono m{term.sign, 0, 0};
        for (std::size_t i = 0; i < term.factors.size(); ++i) {
            const Token& f = term.factors[i];
            if (f.kind == Token::Kind::Number) {
                m.c *= f.value;
            } else if (f.kind == Token::Kind::X || f.kind == Token::Kind::Y) {
                int power = 1;
                if (i + 1 < term.factors.size() &&
                    term.factors[i + 1].kind == Token::Kind::Caret) {
                    if (i + 2 >= term.factors.size() ||
                        term.factors[i + 2].kind != Token::Kind::Number) {
                        throw config_error("expression: bad exponent in '" +
                                           text + "'");
                    }
                    power = static_cast<int>(term.factors[i + 2].value);
                    i += 2;
                }
                (f.kind == Token::Kind::X ? m.px : m.py) += power;
            } else if (f.kind == Token::Kind::Caret) {
                throw config_error("expression: '^' must follow x or y in '" +
                                   text + "'");
            } else {
                throw config_error("expression: parameters are not allowed "
                                   "in source expressions: '" +
                                   text + "'");
            }
        }
        monos.push_back(m);
    }
    return [monos](double x, double y) {
        double v = 0.0;
        for (const Mono& m : monos) {
            v += m.c * std::pow(x, m.px) * std::pow(y, m.py);
        }
        return v;
    };
}

}  // namespace lrom::expr
