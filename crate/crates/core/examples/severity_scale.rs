//! The simplified severity scale: score and five-year risk for every
//! combination of drusen and pigment grades in two eyes.

use prognos::cohort::{Drusen, EyeGrade, Pigment};
use prognos::scales::{sss_score, RiskTable, SssResult};

fn main() {
    let table = RiskTable::default();
    let grades: Vec<EyeGrade> = Drusen::ALL
        .iter()
        .flat_map(|&d| Pigment::ALL.iter().map(move |&p| EyeGrade::new(d, p)))
        .collect();

    print!("{:<22}", "left \\ right");
    for g in &grades {
        print!(" {:>5}", short(*g));
    }
    println!();
    for &left in &grades {
        print!("{:<22}", format!("{} / {}", left.drusen.name(), left.pigment.name()));
        for &right in &grades {
            print!(" {:>5}", sss_score(left, right, true));
        }
        println!();
    }

    println!("\nscore  five-year risk");
    for (score, risk) in table.risks().iter().enumerate() {
        println!("{score:>5}  {:>13.1}%", 100.0 * risk);
    }

    let worst = EyeGrade::new(Drusen::Large, Pigment::Present);
    let r = SssResult::from_grades(worst, worst, true, &table);
    println!(
        "\nlarge drusen and pigment in both eyes: score {}, risk {:.0}%",
        r.score,
        100.0 * r.five_year_risk
    );
}

fn short(g: EyeGrade) -> String {
    let d = match g.drusen {
        Drusen::NoneSmall => "n",
        Drusen::Medium => "m",
        Drusen::Large => "L",
    };
    format!("{d}{}", if g.pigment == Pigment::Present { "+p" } else { "" })
}
