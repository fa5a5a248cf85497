//! Neutral synthetic vocabulary for fixture verdicts.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const FIRST: &[&str] = &[
    "Marek", "Ján", "Peter", "Tomáš", "Jozef", "Michal", "Ľubomír", "Dušan", "Zuzana", "Mária", "Katarína", "Jana",
    "Lucia", "Ivana", "Róbert", "Štefan", "Ondrej", "Matúš",
];
const LAST: &[&str] = &[
    "Kováč", "Varga", "Horváth", "Baláž", "Tóth", "Novák", "Szabó", "Molnár", "Šimko", "Hruška", "Lukáč", "Polák",
    "Kráľ", "Čech", "Benko", "Ďurica",
];
const TOWNS: &[&str] = &[
    "Lúčka", "Dolná Lehota", "Nové Pole", "Veľká Ves", "Malá Ves", "Stredné Mesto", "Horné Záhorie", "Trnávka",
    "Brezina", "Lipovec", "Krásno", "Žihárec",
];
const STREETS: &[&str] = &["Horná", "Hlavná", "Školská", "Mlynská", "Záhradná", "Štúrova", "Poľná", "Krátka"];
const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];
const STORES: &[&str] = &["Potraviny Sever", "Drogéria Luna", "Elektro Plus", "Záhradné centrum Kvet", "Stavebniny Mór"];
const OBJECTS: &[&str] = &[
    "an electric chainsaw",
    "a mobile phone",
    "two bottles of spirits",
    "a bicycle",
    "a set of hand tools",
    "a laptop computer",
    "a wallet with cash",
    "a pair of winter tyres",
    "copper cables",
    "a gold necklace",
];
const CARS: &[&str] = &["Škoda Octavia", "Škoda Fabia", "Volkswagen Golf", "Dacia Logan", "Kia Ceed"];
const SUBSTANCES: &[&str] = &["methamphetamine", "cannabis", "heroin", "MDMA"];
const OFFENSES: &[(&str, u32)] = &[
    ("theft", 212),
    ("burglary", 194),
    ("endangering under the influence of an addictive substance", 289),
    ("bodily harm", 156),
    ("dangerous threatening", 360),
    ("illicit possession of narcotic substances", 171),
    ("damaging property", 245),
    ("fraud", 221),
];
const REASONS: &[&str] = &[
    "The district prosecutor filed an indictment against the accused on DATE.",
    "The court heard the witnesses NAME and NAME and read the documentary evidence in the file.",
    "The accused confessed to the act at the main hearing and expressed regret.",
    "In determining the type and length of the sentence the court took into account the previous life of the accused and the circumstances of the case.",
    "The decision on costs is based on the provisions of the code of criminal procedure.",
    "The injured party NAME joined the proceedings with a claim for compensation of damage.",
    "The expert opinion submitted to the court confirmed the value of the items concerned.",
    "The court considers the evidence taken to be sufficient and consistent.",
    "The accused has been convicted once before, in TOWN, for a property offense.",
];
pub(super) const UNUSUAL_OPENERS: &[&str] = &[
    "is held responsible for having acted so that",
    "bears criminal liability because",
    "shall answer for the following conduct, namely that",
    "is convicted on the ground that",
];

pub(super) fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty pool")
}

pub(super) fn name(rng: &mut ChaCha8Rng) -> String {
    format!("{} {}", pick(rng, FIRST), pick(rng, LAST))
}

pub(super) fn town(rng: &mut ChaCha8Rng) -> &'static str {
    pick(rng, TOWNS)
}

pub(super) fn street(rng: &mut ChaCha8Rng) -> &'static str {
    pick(rng, STREETS)
}

pub(super) fn date(rng: &mut ChaCha8Rng, year: i32) -> String {
    format!("{} {} {}", rng.gen_range(1..=28), pick(rng, MONTHS), year)
}

pub(super) fn offense(rng: &mut ChaCha8Rng) -> (&'static str, u32) {
    *OFFENSES.choose(rng).expect("non-empty")
}

fn amount(rng: &mut ChaCha8Rng) -> String {
    let whole: u32 = rng.gen_range(40..20_000);
    let cents: u32 = rng.gen_range(0..100);
    if whole >= 1000 {
        format!("{} {:03},{cents:02}", whole / 1000, whole % 1000)
    } else {
        format!("{whole},{cents:02}")
    }
}

fn act(rng: &mut ChaCha8Rng, year: i32) -> String {
    match rng.gen_range(0..7) {
        0 => format!(
            "broke the lock of a garden shed belonging to the injured party {} with a crowbar, entered the shed and took from it {} and {}",
            name(rng),
            pick(rng, OBJECTS),
            pick(rng, OBJECTS)
        ),
        1 => format!(
            "in the store {} took from a shelf {} in the value of {} EUR and left the store without paying",
            pick(rng, STORES),
            pick(rng, OBJECTS),
            amount(rng)
        ),
        2 => format!(
            "drove a passenger car {} on the road from {} towards {} after consuming alcoholic beverages, when a breath test performed by a police patrol showed {},{:02} mg/l of alcohol in exhaled air",
            pick(rng, CARS),
            town(rng),
            town(rng),
            rng.gen_range(0..3),
            rng.gen_range(10..100)
        ),
        3 => format!(
            "attacked the injured party {} by hitting the victim several times in the face with a fist, causing an injury that required medical treatment for {} days",
            name(rng),
            rng.gen_range(7..60)
        ),
        4 => format!(
            "offered and sold to at least {} persons a crystalline substance containing {} in the total amount of at least {},{} grams for {} EUR per gram",
            rng.gen_range(2..9),
            pick(rng, SUBSTANCES),
            rng.gen_range(1..40),
            rng.gen_range(0..10),
            rng.gen_range(10..90)
        ),
        5 => format!(
            "threatened the injured party {} with a kitchen knife in the courtyard of the house no. {} on {} street, shouting that the victim would not survive the night, which caused the victim justified fear",
            name(rng),
            rng.gen_range(1..120),
            street(rng)
        ),
        _ => format!(
            "concluded with the company {} s.r.o. a loan agreement dated {} for the amount of {} EUR, although from the beginning the accused did not intend to repay the loan",
            pick(rng, STORES),
            date(rng, year),
            amount(rng)
        ),
    }
}

/// One factual statement ending with a comma.
pub(super) fn fact_sentence(rng: &mut ChaCha8Rng, year: i32) -> String {
    let when = if rng.gen_bool(0.7) {
        format!("on {} at about {:02}:{:02}", date(rng, year), rng.gen_range(0..24), rng.gen_range(0..60))
    } else {
        format!("in the period from {} to {}", date(rng, year), date(rng, year))
    };
    let mut s = format!("{when} in {}, on {} street, {}", town(rng), street(rng), act(rng, year));
    let extra = rng.gen_range(0..3);
    for _ in 0..extra {
        s.push_str(", and subsequently ");
        s.push_str(&act(rng, year));
    }
    if rng.gen_bool(0.5) {
        s.push_str(&format!(
            ", thereby causing damage to the injured party in the total amount of {} EUR",
            amount(rng)
        ));
    }
    s.push(',');
    s
}

pub(super) fn reasoning(rng: &mut ChaCha8Rng, year: i32) -> String {
    let n = rng.gen_range(2..6);
    (0..n)
        .map(|_| {
            let mut s = pick(rng, REASONS).to_string();
            while s.contains("NAME") {
                s = s.replacen("NAME", &name(rng), 1);
            }
            s.replace("DATE", &date(rng, year)).replace("TOWN", town(rng))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Replace some spaces by line breaks, roughly every 60 to 90 chars.
pub(super) fn wrap(rng: &mut ChaCha8Rng, text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut col = 0;
    let mut width = rng.gen_range(60..90);
    for c in text.chars() {
        if c == ' ' && col >= width {
            out.push('\n');
            col = 0;
            width = rng.gen_range(60..90);
        } else {
            out.push(c);
            col += 1;
        }
    }
    out
}
