#pragma once

// Generated by tests/oracles/generate_oracles.py; do not edit by hand.

namespace oracle {

struct EigenValue { int alpha; double x; double value; };
inline constexpr EigenValue kEigenstates[] = {
    {0, 0.0, 0.7511255444649425},
    {0, 0.5, 0.6628659664424795},
    {0, 1.3, 0.3226515045649638},
    {0, -2.7, 0.019620458198716238},
    {0, 4.0, 0.0002519745490309146},
    {0, 7.5, 4.583320509256901e-13},
    {1, 0.0, 0.0},
    {1, 0.5, 0.46871701988925174},
    {1, 1.3, 0.5931875737786132},
    {1, -2.7, -0.07491829882841701},
    {1, 4.0, 0.0014253832984494554},
    {1, 7.5, 4.861345518670403e-12},
    {2, 0.0, -0.5311259660135984},
    {2, 0.5, -0.23435850994462587},
    {2, 1.3, 0.5429947790742691},
    {2, -2.7, 0.18840564779442648},
    {2, 4.0, 0.00552336028149164},
    {2, 7.5, 3.613600168878333e-11},
    {5, 0.0, 0.0},
    {5, 0.5, 0.43857509500323216},
    {5, 1.3, -0.39939146281375076},
    {5, -2.7, -0.5592748270418256},
    {5, 4.0, 0.09355563118061758},
    {5, 7.5, 5.123972887899429e-09},
    {10, 0.0, -0.3726171363829174},
    {10, 0.5, 0.2456573046157212},
    {10, 1.3, -0.34999147167891237},
    {10, -2.7, -0.24422753828996502},
    {10, 4.0, 0.5207644712024191},
    {10, 7.5, 2.807790685421344e-06},
    {20, 0.0, 0.31529120094180285},
    {20, 0.5, -0.31525671963013835},
    {20, 1.3, -0.12812760225717432},
    {20, -2.7, -0.16275805638368482},
    {20, 4.0, 0.0977598442893289},
    {20, 7.5, 0.011901734656220261},
    {50, 0.0, -0.2516832988208715},
    {50, 0.5, -0.07696928793503197},
    {50, 1.3, -0.22621953385162208},
    {50, -2.7, 0.026063373930425127},
    {50, 4.0, -0.0411647619854878},
    {50, 7.5, -0.02804649777092238},
};

inline constexpr double kPsi20AtTen = 3.3140237863718256e-09;
inline constexpr double kPsi50AtTen = 0.33463391455873537;
inline constexpr double kPsi50AtFifteen = 5.849929425353974e-17;

inline constexpr double kMeanX0[] = {
    0.0,
    0.7071067811865476,
    1.1380711874576983,
    1.4659258262890682,
    1.7384260859804925,
    1.9757346816784738,
    2.188358529315514,
    2.3825208864978173,
    2.5622407879980598,
    2.730280777910182,
    2.888631248554673,
    3.038779957827069,
    3.18187222919163,
    3.3188113209345693,
    3.4503240743475434,
    3.577005418141551,
    3.699349467044541,
    3.8177718241445837,
    3.9326259386632896,
    4.044215341878575,
    4.152802959900392};
inline constexpr double kExactAmplitudeExponent = 0.5746808670981934;

inline constexpr double kGaussianTimes[] = {1.0, 4.0, 5.0, 6.0, 10.0, 20.0};
inline constexpr double kGaussianResponse[] = {
    2.985352238210639e-25,
    0.0007909966581272948,
    0.15133237216631998,
    0.777566617744357,
    -0.8851986728884912,
    0.6002913351054944};
inline constexpr double kGaussianAmplitude = 0.9231163463866358;

inline constexpr double kDuffingTimes[] = {0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0, 22.5, 25.0, 27.5, 30.0, 32.5, 35.0, 37.5, 40.0, 42.5, 45.0, 47.5, 50.0};
inline constexpr double kDuffingClassicalX[] = {
    0.0,
    0.149585783141817,
    -0.4791145067626629,
    0.7038413030467349,
    -0.5503051821941187,
    -0.060451571138400925,
    0.934743685406007,
    -1.677621977725983,
    1.8678967466289673,
    -1.2787784674259914,
    0.023803810843366732,
    1.489195177865787,
    -2.711529282679978,
    3.127257291844919,
    -2.4840936306895105,
    0.941555708721859,
    1.0421799286843685,
    -2.9045722645322107,
    4.080372177053436,
    -4.149957916593946,
    3.0616865451281847};
inline constexpr double kDuffingQuantumX[] = {
    0.0,
    0.14719358837334795,
    -0.4746393717430003,
    0.7079254140119534,
    -0.5780144000752124,
    -0.004006284034694579,
    0.8659171471899036,
    -1.6345184570156963,
    1.896414137205031,
    -1.4044644782119897,
    0.23099461201873778,
    1.2534975833235709,
    -2.526981267412413,
    3.081992548699475,
    -2.6297166458141885,
    1.2614217228566942,
    0.6105033397755639,
    -2.4415354567202967,
    3.686561187480512,
    -3.9313905635283146,
    3.0731086358697475};
inline constexpr double kDuffingQuantumClassicalGap = 0.43973702128027514;

inline constexpr double kThermoRatioBeta001 = 0.9987755002082832;
inline constexpr double kThermoRatioAcceptance = 0.9950083333194445;

}  // namespace oracle
