/// Exact transportation cost between uniform empirical measures, solved as an integer
/// min-cost flow (successive shortest paths with Bellman-Ford). Each of the `n` source
/// points ships `m` units and each of the `m` sinks receives `n`.
pub fn transport_oracle(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let src = n + m;
    let dst = src + 1;
    let nodes = dst + 1;
    // (to, capacity, cost, reverse index)
    let mut g: Vec<Vec<(usize, i64, f64, usize)>> = vec![Vec::new(); nodes];
    let add =
        |g: &mut Vec<Vec<(usize, i64, f64, usize)>>, u: usize, v: usize, cap: i64, cost: f64| {
            let ru = g[v].len();
            let rv = g[u].len();
            g[u].push((v, cap, cost, ru));
            g[v].push((u, 0, -cost, rv));
        };
    for (i, x) in a.iter().enumerate() {
        add(&mut g, src, i, m as i64, 0.0);
        for (j, y) in b.iter().enumerate() {
            add(&mut g, i, n + j, i64::MAX / 4, (x - y).abs());
        }
    }
    for j in 0..m {
        add(&mut g, n + j, dst, n as i64, 0.0);
    }
    let mut cost = 0.0;
    loop {
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; nodes];
        dist[src] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u].is_infinite() {
                    continue;
                }
                for (k, &(v, cap, c, _)) in g[u].iter().enumerate() {
                    if cap > 0 && dist[u] + c < dist[v] - 1e-12 {
                        dist[v] = dist[u] + c;
                        prev[v] = Some((u, k));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if dist[dst].is_infinite() {
            break;
        }
        let mut push = i64::MAX;
        let mut v = dst;
        while let Some((u, k)) = prev[v] {
            push = push.min(g[u][k].1);
            v = u;
        }
        let mut v = dst;
        while let Some((u, k)) = prev[v] {
            let (_, _, c, r) = g[u][k];
            g[u][k].1 -= push;
            g[v][r].1 += push;
            cost += push as f64 * c;
            v = u;
        }
    }
    cost / (n * m) as f64
}
