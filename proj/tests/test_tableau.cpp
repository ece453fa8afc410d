#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "dgflow/tableau.hpp"

using namespace dgflow;

TEST_CASE("named tableaux classify as expected") {
    const TableauReport ee = validate_tableau(ButcherTableau::explicit_euler());
    CHECK(ee.consistent);
    CHECK(ee.explicit_method);
    CHECK(ee.row_sums_match);
    CHECK(ee.order == 1);
    CHECK(ee.describe() == "consistent, explicit, order 1");

    const TableauReport ie = validate_tableau(ButcherTableau::implicit_euler());
    CHECK(ie.consistent);
    CHECK_FALSE(ie.explicit_method);
    CHECK(ie.row_sums_match);
    CHECK(ie.order == 1);
    CHECK(ie.describe() == "consistent, implicit, order 1");

    const TableauReport heun = validate_tableau(ButcherTableau::heun());
    CHECK(heun.consistent);
    CHECK(heun.explicit_method);
    CHECK(heun.row_sums_match);
    CHECK(heun.order2);
    CHECK(heun.order == 2);
    CHECK(heun.describe() == "consistent, explicit, order 2");
}

TEST_CASE("order-2 condition fails for b = (1, 0), a21 = 1") {
    ButcherTableau t;
    t.a = Matrix::Zero(2, 2);
    t.a(1, 0) = 1.0;
    t.b = Vector::Zero(2);
    t.b[0] = 1.0;
    t.c = Vector::Zero(2);
    t.c[1] = 1.0;
    const TableauReport r = validate_tableau(t);
    CHECK(r.consistent);
    CHECK(r.explicit_method);
    CHECK_FALSE(r.order2);
    CHECK(r.order == 1);
}

TEST_CASE("inconsistent weights give unknown order") {
    ButcherTableau t = ButcherTableau::explicit_euler();
    t.b[0] = 0.8;
    const TableauReport r = validate_tableau(t);
    CHECK_FALSE(r.consistent);
    CHECK(r.order == 0);
    CHECK(r.describe() == "inconsistent, explicit, order unknown");
}

TEST_CASE("implicit midpoint classifies as order 2") {
    ButcherTableau t;
    t.a = Matrix::Constant(1, 1, 0.5);
    t.b = Vector::Constant(1, 1.0);
    t.c = Vector::Constant(1, 0.5);
    const TableauReport r = validate_tableau(t);
    CHECK(r.consistent);
    CHECK_FALSE(r.explicit_method);
    CHECK(r.order == 2);
}

TEST_CASE("row-sum convention is checked") {
    ButcherTableau t = ButcherTableau::heun();
    t.c[1] = 0.0;  // violates c2 = a21
    const TableauReport r = validate_tableau(t);
    CHECK_FALSE(r.row_sums_match);
    CHECK(r.describe() == "consistent, explicit, order 2, row-sum convention violated");
}

TEST_CASE("dimension inconsistency is an error") {
    ButcherTableau t = ButcherTableau::heun();
    t.c = Vector::Zero(3);
    CHECK_THROWS_AS(validate_tableau(t), std::invalid_argument);
    t = ButcherTableau::heun();
    t.a = Matrix::Zero(3, 2);
    CHECK_THROWS_AS(validate_tableau(t), std::invalid_argument);
}

TEST_CASE("tableau file round trip") {
    const std::string path = "heun_tableau.txt";
    {
        std::ofstream out(path);
        out << "2\n0 0\n1 0\n0.5 0.5\n0 1\n";
    }
    const ButcherTableau t = ButcherTableau::from_file(path);
    const TableauReport r = validate_tableau(t);
    CHECK(r.order == 2);
    CHECK(r.explicit_method);
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "2\n0 0\n1 0\n0.5\n";  // truncated
    }
    CHECK_THROWS_AS(ButcherTableau::from_file(path), std::runtime_error);
    std::remove(path.c_str());

    CHECK_THROWS_AS(ButcherTableau::from_file("no_such_tableau_file.txt"), std::runtime_error);
}
