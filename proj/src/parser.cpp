#include "biopepad/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

namespace biopepad {

bool ParseResult::has_errors() const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [](const ParseDiagnostic& d) {
        return d.severity == ParseDiagnostic::Severity::Error;
    });
}

std::vector<const ParseDiagnostic*> ParseResult::warnings() const {
    std::vector<const ParseDiagnostic*> out;
    for (const auto& d : diagnostics)
        if (d.severity == ParseDiagnostic::Severity::Warning) out.push_back(&d);
    return out;
}

std::string format_diagnostic(const ParseDiagnostic& d, std::string_view origin) {
    std::ostringstream os;
    os << origin << ":" << d.line << ":" << d.column << ": "
       << (d.severity == ParseDiagnostic::Severity::Error ? "error" : "warning") << ": "
       << d.message;
    return os.str();
}

namespace {

enum class Tok {
    End,
    Ident,
    Number,
    Semi,      // ;
    Equals,    // =
    Colon,     // :
    Comma,     // ,
    Plus,      // +
    Minus,     // -
    Star,      // *
    Slash,     // /
    Caret,     // ^
    LParen,    // (
    RParen,    // )
    LBracket,  // [
    RBracket,  // ]
    Less,      // <
    Greater,   // >
    Reactant,  // <<
    Product,   // >>
    Activator, // (+)
    Inhibitor, // (-)
    Modifier,  // (.)
    Invalid,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_trivia();
        Token t;
        t.line = line_;
        t.column = column_;
        if (pos_ >= text_.size()) {
            t.kind = Tok::End;
            return t;
        }
        const char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                advance();
            t.kind = Tok::Ident;
            t.text = std::string(text_.substr(start, pos_ - start));
            return t;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            return lex_number(t);
        }
        switch (c) {
            case ';': advance(); t.kind = Tok::Semi; return t;
            case '=': advance(); t.kind = Tok::Equals; return t;
            case ':': advance(); t.kind = Tok::Colon; return t;
            case ',': advance(); t.kind = Tok::Comma; return t;
            case '+': advance(); t.kind = Tok::Plus; return t;
            case '-': advance(); t.kind = Tok::Minus; return t;
            case '*': advance(); t.kind = Tok::Star; return t;
            case '/': advance(); t.kind = Tok::Slash; return t;
            case '^': advance(); t.kind = Tok::Caret; return t;
            case ')': advance(); t.kind = Tok::RParen; return t;
            case '[': advance(); t.kind = Tok::LBracket; return t;
            case ']': advance(); t.kind = Tok::RBracket; return t;
            case '(': {
                // "(+)", "(-)", "(.)" are role operators, anything else is a
                // plain parenthesis.
                if (pos_ + 2 < text_.size() && text_[pos_ + 2] == ')') {
                    const char mid = text_[pos_ + 1];
                    if (mid == '+' || mid == '-' || mid == '.') {
                        advance(); advance(); advance();
                        t.kind = mid == '+' ? Tok::Activator
                               : mid == '-' ? Tok::Inhibitor
                                            : Tok::Modifier;
                        return t;
                    }
                }
                advance();
                t.kind = Tok::LParen;
                return t;
            }
            case '<': {
                advance();
                if (pos_ < text_.size() && text_[pos_] == '<') {
                    advance();
                    t.kind = Tok::Reactant;
                } else {
                    t.kind = Tok::Less;
                }
                return t;
            }
            case '>': {
                advance();
                if (pos_ < text_.size() && text_[pos_] == '>') {
                    advance();
                    t.kind = Tok::Product;
                } else {
                    t.kind = Tok::Greater;
                }
                return t;
            }
            default:
                advance();
                t.kind = Tok::Invalid;
                t.text = std::string(1, c);
                return t;
        }
    }

private:
    Token lex_number(Token t) {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
        if (pos_ < text_.size() && text_[pos_] == '.') {
            advance();
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            std::size_t mark = pos_;
            advance();
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) advance();
            if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    advance();
            } else {
                // not an exponent after all; rewind
                while (pos_ > mark) retreat();
            }
        }
        t.kind = Tok::Number;
        t.text = std::string(text_.substr(start, pos_ - start));
        t.number = std::strtod(t.text.c_str(), nullptr);
        return t;
    }

    void skip_trivia() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    void advance() {
        if (pos_ < text_.size()) {
            if (text_[pos_] == '\n') {
                ++line_;
                column_ = 1;
            } else {
                ++column_;
            }
            ++pos_;
        }
    }

    void retreat() {
        // Only used to rewind within a single line (number lexing).
        --pos_;
        --column_;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 1;
};

const std::set<std::string> kKeywords = {"param", "step",    "rate",   "delay", "species",
                                         "history", "system", "compartment", "max", "init", "MA"};

class Parser {
public:
    explicit Parser(std::string_view text) : lexer_(text) { bump(); }

    ParseResult run() {
        while (cur_.kind != Tok::End) {
            parse_statement();
        }
        finish();
        ParseResult result;
        result.diagnostics = std::move(diags_);
        bool errors = std::any_of(result.diagnostics.begin(), result.diagnostics.end(),
                                  [](const ParseDiagnostic& d) {
                                      return d.severity == ParseDiagnostic::Severity::Error;
                                  });
        if (!errors) result.spec = std::move(spec_);
        return result;
    }

private:
    void bump() { cur_ = lexer_.next(); }

    void error(const Token& at, std::string message) {
        diags_.push_back({at.line, at.column, std::move(message), ParseDiagnostic::Severity::Error});
    }

    void warning(const Token& at, std::string message) {
        diags_.push_back(
            {at.line, at.column, std::move(message), ParseDiagnostic::Severity::Warning});
    }

    // Skips ahead past the next ';' so later statements still get checked.
    void recover() {
        while (cur_.kind != Tok::End && cur_.kind != Tok::Semi) bump();
        if (cur_.kind == Tok::Semi) bump();
    }

    bool expect(Tok kind, const char* what) {
        if (cur_.kind != kind) {
            error(cur_, std::string("expected ") + what);
            return false;
        }
        bump();
        return true;
    }

    bool expect_semi() { return expect(Tok::Semi, "';'"); }

    std::optional<std::string> expect_name(const char* what) {
        if (cur_.kind != Tok::Ident) {
            error(cur_, std::string("expected ") + what);
            return std::nullopt;
        }
        if (kKeywords.count(cur_.text)) {
            error(cur_, "'" + cur_.text + "' is a keyword and cannot name a " + what);
            return std::nullopt;
        }
        std::string name = cur_.text;
        bump();
        return name;
    }

    std::optional<double> expect_number() {
        bool negative = false;
        if (cur_.kind == Tok::Minus) {
            negative = true;
            bump();
        }
        if (cur_.kind != Tok::Number) {
            error(cur_, "expected a number");
            return std::nullopt;
        }
        if (!std::isfinite(cur_.number)) {
            error(cur_, "number out of range");
            return std::nullopt;
        }
        double v = cur_.number;
        bump();
        return negative ? -v : v;
    }

    std::optional<std::int64_t> expect_integer(const char* what) {
        Token at = cur_;
        auto v = expect_number();
        if (!v) return std::nullopt;
        if (*v != std::floor(*v) || std::abs(*v) > 9.0e18) {
            error(at, std::string(what) + " must be an integer");
            return std::nullopt;
        }
        return static_cast<std::int64_t>(*v);
    }

    void parse_statement() {
        if (cur_.kind == Tok::Semi) {  // stray semicolon
            bump();
            return;
        }
        if (cur_.kind != Tok::Ident) {
            error(cur_, "expected a statement");
            recover();
            return;
        }
        const std::string head = cur_.text;
        if (head == "param") return parse_param();
        if (head == "step") return parse_step();
        if (head == "rate") return parse_rate();
        if (head == "delay") return parse_delay();
        if (head == "species") return parse_species();
        if (head == "history") return parse_history();
        if (head == "compartment") return parse_compartment();
        if (head == "system") return parse_system();
        if (kKeywords.count(head)) {
            error(cur_, "unexpected keyword '" + head + "'");
            recover();
            return;
        }
        parse_component();
    }

    void parse_param() {
        Token at = cur_;
        bump();
        auto name = expect_name("parameter");
        if (!name || !expect(Tok::Equals, "'='")) return recover();
        auto value = expect_number();
        if (!value || !expect_semi()) return recover();
        if (spec_.param_value(*name)) {
            error(at, "duplicate parameter '" + *name + "'");
            return;
        }
        spec_.params.emplace_back(*name, *value);
    }

    void parse_step() {
        Token at = cur_;
        bump();
        if (!expect(Tok::Equals, "'='")) return recover();
        auto value = expect_number();
        if (!value || !expect_semi()) return recover();
        if (step_seen_) {
            error(at, "duplicate step definition");
            return;
        }
        if (*value <= 0.0) {
            error(at, "step size must be positive");
            return;
        }
        step_seen_ = true;
        spec_.step_size = *value;
    }

    void parse_rate() {
        Token at = cur_;
        bump();
        auto action = expect_name("action");
        if (!action || !expect(Tok::Equals, "'='")) return recover();
        RateDef def;
        def.action = *action;
        if (cur_.kind == Tok::Ident && cur_.text == "MA") {
            bump();
            if (!expect(Tok::LParen, "'('")) return recover();
            auto param = expect_name("parameter");
            if (!param || !expect(Tok::RParen, "')'")) return recover();
            def.law = RateDef::MassAction{*param};
        } else {
            auto expr = parse_expr();
            if (!expr) return recover();
            def.law = std::move(expr);
        }
        if (!expect_semi()) return recover();
        if (spec_.rate_of(def.action)) {
            error(at, "duplicate rate for action '" + def.action + "'");
            return;
        }
        spec_.rates.push_back(std::move(def));
    }

    void parse_delay() {
        Token at = cur_;
        bump();
        auto action = expect_name("action");
        if (!action || !expect(Tok::Equals, "'='")) return recover();
        auto value = expect_number();
        if (!value || !expect_semi()) return recover();
        if (spec_.delay_of(*action)) {
            error(at, "duplicate delay for action '" + *action + "'");
            return;
        }
        if (*value < 0.0) {
            error(at, "delay must be nonnegative");
            return;
        }
        spec_.delays.push_back({*action, *value});
    }

    void parse_species() {
        Token at = cur_;
        bump();
        auto name = expect_name("species");
        if (!name || !expect(Tok::Colon, "':'")) return recover();
        if (cur_.kind != Tok::Ident || cur_.text != "max") {
            error(cur_, "expected 'max'");
            return recover();
        }
        bump();
        if (!expect(Tok::Equals, "'='")) return recover();
        auto max = expect_integer("maximum level");
        if (!max) return recover();
        SpeciesQuantity q;
        q.name = *name;
        q.max_level = *max;
        q.declared = true;
        if (cur_.kind == Tok::Comma) {
            bump();
            if (cur_.kind != Tok::Ident || cur_.text != "init") {
                error(cur_, "expected 'init'");
                return recover();
            }
            bump();
            if (!expect(Tok::Equals, "'='")) return recover();
            auto init = expect_integer("initial level");
            if (!init) return recover();
            q.init_level = *init;
            q.declared_init = true;
        }
        if (!expect_semi()) return recover();
        if (spec_.find_quantity(q.name)) {
            error(at, "duplicate species statement for '" + q.name + "'");
            return;
        }
        spec_.quantities.push_back(std::move(q));
    }

    void parse_history() {
        Token at = cur_;
        bump();
        auto name = expect_name("species");
        if (!name || !expect(Tok::Equals, "'='")) return recover();
        auto expr = parse_expr();
        if (!expr || !expect_semi()) return recover();
        if (spec_.history_of(*name)) {
            error(at, "duplicate history for species '" + *name + "'");
            return;
        }
        spec_.histories.push_back({*name, std::move(expr)});
    }

    void parse_compartment() {
        Token at = cur_;
        bump();
        auto name = expect_name("compartment");
        if (!name) return recover();
        Compartment c;
        c.name = *name;
        if (cur_.kind == Tok::Equals) {
            bump();
            auto v = expect_number();
            if (!v) return recover();
            c.size = *v;
        }
        if (!expect_semi()) return recover();
        for (const auto& existing : spec_.compartments)
            if (existing.name == c.name) {
                error(at, "duplicate compartment '" + c.name + "'");
                return;
            }
        spec_.compartments.push_back(std::move(c));
    }

    void parse_component() {
        Token at = cur_;
        auto name = expect_name("species");
        if (!name || !expect(Tok::Equals, "'='")) return recover();
        SpeciesComponent comp;
        comp.name = *name;
        while (true) {
            auto term = parse_prefix_term(comp.name);
            if (!term) return recover();
            comp.terms.push_back(std::move(*term));
            if (cur_.kind == Tok::Plus) {
                bump();
                continue;
            }
            break;
        }
        if (!expect_semi()) return recover();
        if (spec_.find_component(comp.name)) {
            error(at, "duplicate definition of species '" + comp.name + "'");
            return;
        }
        spec_.components.push_back(std::move(comp));
    }

    std::optional<PrefixTerm> parse_prefix_term(const std::string& owner) {
        if (!expect(Tok::LParen, "'('")) return std::nullopt;
        auto action = expect_name("action");
        if (!action || !expect(Tok::Comma, "','")) return std::nullopt;
        Token stoich_at = cur_;
        auto stoich = expect_integer("stoichiometry");
        if (!stoich || !expect(Tok::RParen, "')'")) return std::nullopt;
        if (*stoich < 1) {
            error(stoich_at, "stoichiometry must be at least 1");
            return std::nullopt;
        }
        RoleOp role;
        switch (cur_.kind) {
            case Tok::Reactant: role = RoleOp::Reactant; break;
            case Tok::Product: role = RoleOp::Product; break;
            case Tok::Activator: role = RoleOp::Activator; break;
            case Tok::Inhibitor: role = RoleOp::Inhibitor; break;
            case Tok::Modifier: role = RoleOp::Modifier; break;
            default:
                error(cur_, "expected a role operator ('<<', '>>', '(+)', '(-)' or '(.)')");
                return std::nullopt;
        }
        bump();
        Token target_at = cur_;
        auto target = expect_name("species");
        if (!target) return std::nullopt;
        if (*target != owner) {
            error(target_at, "prefix term of '" + owner + "' must continue as '" + owner +
                                 "' (only self-reference is supported)");
            return std::nullopt;
        }
        return PrefixTerm{*action, *stoich, role};
    }

    void parse_system() {
        Token at = cur_;
        bump();
        auto proc = parse_process();
        if (!proc || !expect_semi()) return recover();
        if (spec_.initial_process) {
            error(at, "duplicate system definition");
            return;
        }
        spec_.initial_process = std::move(proc);
    }

    ProcessPtr parse_process() {
        ProcessPtr left = parse_process_atom();
        if (!left) return nullptr;
        while (cur_.kind == Tok::Less) {
            bump();
            std::vector<ActionId> coop;
            if (cur_.kind != Tok::Greater) {
                while (true) {
                    auto a = expect_name("action");
                    if (!a) return nullptr;
                    coop.push_back(*a);
                    if (cur_.kind == Tok::Comma) {
                        bump();
                        continue;
                    }
                    break;
                }
            }
            if (!expect(Tok::Greater, "'>'")) return nullptr;
            ProcessPtr right = parse_process_atom();
            if (!right) return nullptr;
            left = make_coop(std::move(left), std::move(right), std::move(coop));
        }
        return left;
    }

    ProcessPtr parse_process_atom() {
        if (cur_.kind == Tok::LParen) {
            bump();
            auto inner = parse_process();
            if (!inner) return nullptr;
            if (!expect(Tok::RParen, "')'")) return nullptr;
            return inner;
        }
        auto name = expect_name("species");
        if (!name) return nullptr;
        if (!expect(Tok::LBracket, "'['")) return nullptr;
        auto level = expect_integer("initial level");
        if (!level) return nullptr;
        if (!expect(Tok::RBracket, "']'")) return nullptr;
        return make_leaf(*name, *level);
    }

    // Expression grammar: + - over * / over unary minus over ^ (right-assoc).
    ExprPtr parse_expr() { return parse_additive(); }

    ExprPtr parse_additive() {
        ExprPtr lhs = parse_multiplicative();
        if (!lhs) return nullptr;
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            BinOp op = cur_.kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
            bump();
            ExprPtr rhs = parse_multiplicative();
            if (!rhs) return nullptr;
            lhs = make_binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_multiplicative() {
        ExprPtr lhs = parse_unary();
        if (!lhs) return nullptr;
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            BinOp op = cur_.kind == Tok::Star ? BinOp::Mul : BinOp::Div;
            bump();
            ExprPtr rhs = parse_unary();
            if (!rhs) return nullptr;
            lhs = make_binary(op, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (cur_.kind == Tok::Minus) {
            bump();
            ExprPtr e = parse_unary();
            if (!e) return nullptr;
            return make_neg(std::move(e));
        }
        return parse_power();
    }

    ExprPtr parse_power() {
        ExprPtr base = parse_atom();
        if (!base) return nullptr;
        if (cur_.kind == Tok::Caret) {
            bump();
            ExprPtr exp = parse_unary();
            if (!exp) return nullptr;
            return make_binary(BinOp::Pow, std::move(base), std::move(exp));
        }
        return base;
    }

    ExprPtr parse_atom() {
        if (cur_.kind == Tok::Number) {
            ExprPtr e = make_number(cur_.number);
            bump();
            return e;
        }
        if (cur_.kind == Tok::Ident) {
            if (kKeywords.count(cur_.text)) {
                error(cur_, "'" + cur_.text + "' is a keyword and cannot appear in an expression");
                return nullptr;
            }
            ExprPtr e = make_var(cur_.text);
            bump();
            return e;
        }
        if (cur_.kind == Tok::LParen) {
            bump();
            ExprPtr e = parse_expr();
            if (!e) return nullptr;
            if (!expect(Tok::RParen, "')'")) return nullptr;
            return e;
        }
        error(cur_, "expected an expression");
        return nullptr;
    }

    // Applies defaults once the whole file has been read: synthesized
    // quantity records, zero delays with a warning, leaf-level consistency.
    void finish() {
        if (!spec_.initial_process) {
            Token at;
            at.line = 1;
            at.column = 1;
            error(at, "missing system definition");
            return;
        }
        std::map<SpeciesId, std::int64_t> leaf_levels;
        collect_leaf_levels(spec_.initial_process, leaf_levels);

        for (const auto& comp : spec_.components) {
            auto leaf = leaf_levels.find(comp.name);
            if (auto* q = const_cast<SpeciesQuantity*>(spec_.find_quantity(comp.name))) {
                if (!q->declared_init && leaf != leaf_levels.end()) q->init_level = leaf->second;
            } else {
                SpeciesQuantity fresh;
                fresh.name = comp.name;
                fresh.max_level = kDefaultMaxLevel;
                fresh.init_level = leaf != leaf_levels.end() ? leaf->second : 0;
                spec_.quantities.push_back(std::move(fresh));
            }
        }

        Token at;
        at.line = 1;
        at.column = 1;
        for (const auto& action : spec_.action_order()) {
            if (!spec_.delay_of(action)) {
                warning(at, "no delay defined for action '" + action + "'; assuming 0");
                spec_.delays.push_back({action, 0.0});
            }
        }
    }

    static void collect_leaf_levels(const ProcessPtr& p, std::map<SpeciesId, std::int64_t>& out) {
        if (!p) return;
        if (p->is_leaf()) {
            out.emplace(p->leaf().species, p->leaf().init_level);
            return;
        }
        collect_leaf_levels(p->coop().left, out);
        collect_leaf_levels(p->coop().right, out);
    }

    Lexer lexer_;
    Token cur_;
    SystemSpec spec_;
    bool step_seen_ = false;
    std::vector<ParseDiagnostic> diags_;
};

void serialize_process(const ProcessPtr& p, std::ostringstream& os) {
    if (p->is_leaf()) {
        os << p->leaf().species << "[" << p->leaf().init_level << "]";
        return;
    }
    const auto& c = p->coop();
    auto side = [&](const ProcessPtr& q) {
        if (q->is_leaf()) {
            serialize_process(q, os);
        } else {
            os << "(";
            serialize_process(q, os);
            os << ")";
        }
    };
    side(c.left);
    os << " <";
    for (std::size_t i = 0; i < c.coop_set.size(); ++i) {
        if (i) os << ", ";
        os << c.coop_set[i];
    }
    os << "> ";
    side(c.right);
}

}  // namespace

ParseResult parse_model(const ModelSource& src) {
    Parser parser(src.text);
    return parser.run();
}

ParseResult parse_model(std::string_view text, std::string_view origin) {
    ModelSource src;
    src.text = std::string(text);
    src.origin = std::string(origin);
    return parse_model(src);
}

std::string serialize_model(const SystemSpec& spec) {
    std::ostringstream os;
    for (const auto& c : spec.compartments) {
        os << "compartment " << c.name;
        if (c.size) os << " = " << format_double(*c.size);
        os << ";\n";
    }
    os << "step = " << format_double(spec.step_size) << ";\n";
    for (const auto& [name, value] : spec.params)
        os << "param " << name << " = " << format_double(value) << ";\n";
    for (const auto& q : spec.quantities)
        os << "species " << q.name << " : max = " << q.max_level << ", init = " << q.init_level
           << ";\n";
    for (const auto& r : spec.rates) {
        os << "rate " << r.action << " = ";
        if (const auto* ma = std::get_if<RateDef::MassAction>(&r.law))
            os << "MA(" << ma->param << ")";
        else
            os << render_expr(*std::get<ExprPtr>(r.law));
        os << ";\n";
    }
    for (const auto& d : spec.delays)
        os << "delay " << d.action << " = " << format_double(d.delay) << ";\n";
    for (const auto& c : spec.components) {
        os << c.name << " = ";
        for (std::size_t i = 0; i < c.terms.size(); ++i) {
            const auto& t = c.terms[i];
            if (i) os << " + ";
            os << "(" << t.action << ", " << t.stoich << ") " << role_symbol(t.role) << " "
               << c.name;
        }
        os << ";\n";
    }
    for (const auto& h : spec.histories)
        os << "history " << h.species << " = " << render_expr(*h.expr) << ";\n";
    if (spec.initial_process) {
        os << "system ";
        serialize_process(spec.initial_process, os);
        os << ";\n";
    }
    return os.str();
}

}  // namespace biopepad
