use std::rc::Rc;

use proptest::prelude::*;

use flexperm::generic::{centered_upper_bound, leq_check_bounded, Condition, Handle, PosetContext};
use flexperm::independence::{build_dense_family, safe_extend_left, safe_extend_right, untraceable_collision, WordContext};
use flexperm::itinerary::{itinerary_from, AtomMapContext};
use flexperm::structures::build_structure;
use flexperm::words::{atom_sequence, dagger_decompose};
use flexperm::*;

fn letters(gens: u32, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((0..gens, any::<bool>()), 0..max)
        .prop_map(|v| v.into_iter().map(|(gen, inverse)| Letter { gen, inverse }).collect())
}

fn word(gens: u32, max: usize) -> impl Strategy<Value = Word> {
    letters(gens, max).prop_map(Word::from_letters)
}

fn word_using_x0(gens: u32, max: usize) -> impl Strategy<Value = Word> {
    word(gens, max).prop_filter("uses x0", |w| w.uses(0))
}

fn partial_bijection(n: Point, max: usize) -> impl Strategy<Value = PartialBijection> {
    prop::collection::vec((0..n, 0..n), 0..max).prop_map(|pairs| {
        let mut g = PartialBijection::new();
        for (a, b) in pairs {
            let _ = g.insert(a, b);
        }
        g
    })
}

proptest! {
    #[test]
    fn reduction_is_idempotent(ls in letters(3, 16)) {
        let w = Word::from_letters(ls);
        prop_assert_eq!(Word::from_letters(w.letters().to_vec()), w.clone());
        for p in w.letters().windows(2) {
            prop_assert_ne!(p[0], p[1].inv());
        }
    }

    #[test]
    fn concat_is_associative(a in word(3, 8), b in word(3, 8), c in word(3, 8)) {
        prop_assert_eq!(a.concat(&b).concat(&c), a.concat(&b.concat(&c)));
        prop_assert!(a.concat(&a.invert()).is_trivial());
    }

    #[test]
    fn inversion_is_an_involution(w in word(3, 12)) {
        prop_assert_eq!(w.invert().invert(), w.clone());
        prop_assert_eq!(w.invert().len(), w.len());
    }

    #[test]
    fn word_text_round_trips(w in word(4, 12)) {
        prop_assert_eq!(w.to_string().parse::<Word>().unwrap(), w);
    }

    #[test]
    fn decompositions_reassemble(w in word_using_x0(3, 12)) {
        let d = dagger_decompose(&w).unwrap();
        prop_assert_eq!(d.reassemble(), w.clone());
        let total: i64 = d.exponents.iter().map(|k| k.abs()).sum();
        prop_assert_eq!(d.lprime, total as usize + d.j);
        let atoms = atom_sequence(&w).unwrap();
        prop_assert_eq!(atoms.reassemble(), w);
        prop_assert_eq!(atoms.lprime(), d.lprime);
    }

    #[test]
    fn itineraries_are_determined_by_any_coordinate(
        w in word_using_x0(2, 7),
        f0 in partial_bijection(8, 10),
        f1 in partial_bijection(8, 10),
        a in 0..10u64,
        slot in 0..8usize,
    ) {
        let atoms = atom_sequence(&w).unwrap();
        let rest: [&dyn PointMap; 1] = [&f1];
        let ctx = AtomMapContext::new(&f0, &rest);
        let i = slot % (atoms.lprime() + 1);
        let t = itinerary_from(&atoms, &ctx, i, a).unwrap();
        for (j, s) in t.slots().iter().enumerate() {
            if let Slot::Pt(x) = s {
                prop_assert_eq!(&itinerary_from(&atoms, &ctx, j, *x).unwrap(), &t);
            }
        }
        // once c, always c, going away from the seed
        let s = t.slots();
        prop_assert!(s[i..].windows(2).all(|p| p[0] != Slot::C || p[1] == Slot::C));
        prop_assert!(s[..=i].windows(2).all(|p| p[1] != Slot::C || p[0] == Slot::C));
    }

    #[test]
    fn partial_bijections_invert(g in partial_bijection(20, 15)) {
        for (a, b) in g.pairs() {
            prop_assert_eq!(g.unapply(b), Some(a));
            prop_assert_eq!(g.inverse().apply(b), Some(a));
        }
        prop_assert_eq!(g.inverse().inverse(), g.clone());
        prop_assert_eq!(g.to_string().parse::<PartialBijection>().unwrap(), g);
    }

    #[test]
    fn permutations_compose_with_inverse(g in partial_bijection(12, 12)) {
        // close the partial map into a permutation of its support
        let mut moved = g.clone();
        let mut free_dom: Vec<Point> = g.ran().filter(|b| !g.in_dom(*b)).collect();
        let free_ran: Vec<Point> = g.dom().filter(|a| !g.in_ran(*a)).collect();
        free_dom.sort();
        for (a, b) in free_dom.into_iter().zip(free_ran) {
            moved.insert(a, b).unwrap();
        }
        let moved = moved.restrict(|a| moved.apply(a) != Some(a));
        let p = FiniteSupportPerm::from_moved(moved).unwrap();
        prop_assert!(p.compose(&p.inverse()).is_identity());
        for a in 0..15 {
            prop_assert_eq!(p.unapply(p.apply(a)), a);
        }
        prop_assert_eq!(p.to_string().parse::<FiniteSupportPerm>().unwrap(), p);
    }

    #[test]
    fn safe_extensions_leave_only_traceable_collisions(
        g in partial_bijection(10, 8),
        ws in prop::collection::vec(word_using_x0(2, 4), 1..4),
        a in 0..12u64,
        right in any::<bool>(),
    ) {
        let fb = build_dense_family(1, 0).unwrap();
        let f1 = fb.members()[0].clone();
        let rest: [&dyn PointMap; 1] = [f1.as_ref()];
        let s = build_structure(&StructureDescriptor::new(StructureKind::Trivial));
        let id = FiniteSupportPerm::identity();
        let wc = WordContext::new(ws.clone()).unwrap();
        let ext = if right {
            (!g.in_dom(a)).then(|| safe_extend_right(&s, &id, &g, a, &rest, &wc).unwrap().1)
        } else {
            (!g.in_ran(a)).then(|| safe_extend_left(&s, &id, &g, a, &rest, &wc).unwrap().1)
        };
        if let Some(g2) = ext {
            prop_assert!(g.is_subset_of(&g2) && g2.len() == g.len() + 1);
            for w in &wc.words()[..] {
                let new = AtomMapContext::new(&g2, &rest);
                let old = AtomMapContext::new(&g, &rest);
                prop_assert_eq!(untraceable_collision(&w.atoms, &new, &old, 20), None);
            }
        }
    }

    #[test]
    fn candidates_stay_in_the_family(
        kind in prop::sample::select(vec!["qorder", "sections", "trivial", "rado"]),
        a in 0..30u64,
        seed in 0..40usize,
    ) {
        let s = build_structure(&format!("kind={kind};scramble=(0 3)(1 5)").parse().unwrap());
        // grow a member of the family by least candidates
        let mut g = PartialBijection::new();
        for x in 0..(seed % 8) as Point {
            // the bit-coded Rado graph runs out of u64 candidates quickly
            let Some(b) = s.right_candidates(&g, x).nth(seed % 3) else { break };
            g.insert(x, b).unwrap();
        }
        prop_assert!(s.contains(&g));
        if !g.in_dom(a) {
            for b in s.right_candidates(&g, a).take(3).collect::<Vec<_>>() {
                prop_assert!(s.contains(&g.extend(a, b).unwrap()));
            }
        }
        if !g.in_ran(a) {
            for x in s.left_candidates(&g, a).take(3).collect::<Vec<_>>() {
                prop_assert!(s.contains(&g.extend(x, a).unwrap()));
            }
        }
    }

    #[test]
    fn centered_sets_have_upper_bounds(
        g in partial_bijection(6, 4),
        hs in prop::collection::vec(prop::collection::vec(0..3usize, 0..3), 1..4),
    ) {
        let fb = build_dense_family(3, 0).unwrap();
        let ctx = PosetContext {
            structure: Rc::new(build_structure(&StructureDescriptor::new(StructureKind::Trivial))),
            h: Rc::new(FiniteSupportPerm::identity()),
            family: fb.members().to_vec(),
        };
        let conds: Vec<Condition> = hs
            .into_iter()
            .map(|h| {
                let mut v: Vec<Handle> = Vec::new();
                for i in h {
                    if !v.contains(&Handle(i)) {
                        v.push(Handle(i));
                    }
                }
                Condition::new(g.clone(), v).unwrap()
            })
            .collect();
        let ub = centered_upper_bound(&conds).unwrap();
        for c in &conds {
            prop_assert!(leq_check_bounded(c, &ub, &ctx, 8));
        }
    }
}
