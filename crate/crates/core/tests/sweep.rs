use extraction_game::equilibrium::{threshold_c, Regime};
use extraction_game::sweep::{m_sweep, run_sweep, sweep_output, Format, Params, SweepSpec};
use extraction_game::{is_responsible, Policy};

/// 50x50 grid over (dSP0, dRT0) at M = 6: valid cells are exactly the
/// responsible ones, they all sustain the resource, and the cap-saturated
/// cells are those at or above the threshold curve.
#[test]
fn policy_space_map() {
    let spec = SweepSpec::new(
        "dSP0:0.1:3:50".parse().unwrap(),
        Some("dRT0:-2.1:2.1:50".parse().unwrap()),
        Params {
            m: 6,
            ..Params::default()
        },
    )
    .unwrap();
    let rows = run_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 2500);
    let (mut valid, mut cap) = (0, 0);
    for row in &rows {
        let p = row.params;
        let responsible = Policy::new(p.d_sp0, p.d_rt0, p.d_tr1, p.d_ps1)
            .map(|pol| is_responsible(&pol, p.alpha, p.theta).unwrap())
            .unwrap_or(false);
        assert_eq!(row.result.is_some(), responsible, "{p:?}");
        let Some(r) = &row.result else { continue };
        valid += 1;
        assert!(r.r_star > 0.0 && r.r_star < 1.0);
        let game = p.game().unwrap();
        let boundary = threshold_c(5.0 / 6.0 * p.theta, &game);
        assert_eq!(
            r.regime == Regime::CapSaturated,
            p.d_rt0 >= boundary,
            "{p:?}"
        );
        cap += (r.regime == Regime::CapSaturated) as usize;
    }
    assert!(valid > 500 && cap > 50 && cap < valid);
}

#[test]
fn m_sweeps_follow_the_three_patterns() {
    let at = |rt: f64| {
        m_sweep(
            Params {
                d_rt0: rt,
                ..Params::default()
            },
            1..=30,
        )
        .unwrap()
        .into_iter()
        .map(|r| r.result.unwrap().r_star)
        .collect::<Vec<_>>()
    };
    let flat = at(0.8);
    assert!(flat.iter().all(|&r| r == 0.8 / (0.8 + 2.1)));
    let kink = at(0.2);
    assert!(kink[..6].windows(2).all(|w| w[1] < w[0]));
    assert!(kink[5..].iter().all(|&r| r == 0.2 / (0.2 + 2.1)));
    let fall = at(-1.0);
    assert!(fall.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn json_and_csv_describe_the_same_rows() {
    let spec = SweepSpec::new("M:1:10:10".parse().unwrap(), None, Params::default()).unwrap();
    let csv = sweep_output(&spec, Format::Csv).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&sweep_output(&spec, Format::Json).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(csv.lines().count(), rows.len() + 1);
    for (line, obj) in csv.lines().skip(1).zip(rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], obj["regime"].as_str().unwrap());
        assert_eq!(
            fields[3].parse::<f64>().unwrap(),
            obj["R_star"].as_f64().unwrap()
        );
    }
}
