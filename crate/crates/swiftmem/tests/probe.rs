//! Temporary stage-timing probe.

use swiftmem::bench::{build_corpus, BenchOptions, BENCH_NOW_MS};

#[test]
#[ignore]
fn probe_stage_timings() {
    for n in [10_000usize, 100_000] {
        let setup = build_corpus(&BenchOptions {
            episodes: n,
            tags: 500,
            users: 1,
            queries: 50,
            seed: 42,
            top_k: 10,
            tags_per_query: 5,
            max_expansion_depth: 2,
            dimension: 384,
            workers: 1,
        });
        let mut sums = [0u64; 7];
        let mut candidates = 0usize;
        for q in &setup.queries {
            let plan = setup.engine.plan(&q.text, &q.user, BENCH_NOW_MS).unwrap();
            let r = setup.engine.retrieve(plan, 10).unwrap();
            let t = r.timings;
            for (i, v) in [t.embed_us, t.parse_us, t.route_us, t.expand_us, t.filter_us, t.rank_us, t.total_us]
                .into_iter()
                .enumerate()
            {
                sums[i] += v;
            }
            candidates += r.candidates_examined;
        }
        let q = setup.queries.len() as u64;
        println!(
            "n={n}: embed {} parse {} route {} expand {} filter {} rank {} total {} | mean candidates {}",
            sums[0] / q, sums[1] / q, sums[2] / q, sums[3] / q, sums[4] / q, sums[5] / q, sums[6] / q,
            candidates / q as usize
        );
    }
}
