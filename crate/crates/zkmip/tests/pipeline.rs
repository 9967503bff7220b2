use zkmip::encoding::InnerCode;
use zkmip::gap::{classical_value, OneRoundGame};
use zkmip::history::HistoryStateSpec;
use zkmip::honest::QuestionTuple;
use zkmip::oracle::HonestOracle;
use zkmip::protocol::{circuit_value_fixed_strategy, robustify, ProtocolCircuit, ProverStrategy, RobustifyConfig};
use zkmip::ring::Amp;
use zkmip::simulator::Simulator;
use zkmip::suite::{TINY_CIRCUIT, TINY_STRATEGY};

#[test]
fn tiny_fixture_end_to_end() {
    let c = ProtocolCircuit::parse(TINY_CIRCUIT).unwrap();
    let honest = ProverStrategy::parse(TINY_STRATEGY).unwrap();
    assert_eq!(circuit_value_fixed_strategy(&c, &honest).unwrap(), Amp::ONE);
    let r = robustify(&c, &InnerCode::steane(1).unwrap(), &RobustifyConfig::default()).unwrap();
    let wrapped = r.wrap_strategy(&honest).unwrap();
    let oracle = HonestOracle::new(&HistoryStateSpec::new(&r.circuit, &wrapped).unwrap()).unwrap();
    let sim = Simulator::new(r).unwrap();
    let t = sim.flags[0].t_star;
    let w: QuestionTuple = format!("PV1: Z{t}I1,I1I2,I1I2,I1I2,I1I2,I1I2 | PP1: STAR").parse().unwrap();
    assert_eq!(sim.answer_distribution(&w).unwrap(), oracle.distribution(&w).unwrap());
}

#[test]
fn guessing_game_from_its_file() {
    let g = OneRoundGame::parse(include_str!("../fixtures/guess.game")).unwrap();
    assert_eq!(classical_value(&g).unwrap().to_string(), "1/2");
}
