//! `--grid` values: `START:STOP:geometric:POINTS` or `a,b,c`.

use kpairs_core::verify::geometric_grid;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid(pub Vec<u64>);

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, kind, points] = parts[..] else {
            return Err(format!("expected START:STOP:geometric:POINTS, got {s:?}"));
        };
        if kind != "geometric" {
            return Err(format!("unknown grid kind {kind:?} (only \"geometric\")"));
        }
        let start = parse_u64(start)?;
        let stop = parse_u64(stop)?;
        let points: usize = points
            .trim()
            .parse()
            .map_err(|e| format!("bad point count {points:?}: {e}"))?;
        if points < 1 {
            return Err("grid needs at least one point".into());
        }
        geometric_grid(start, stop, points).map_err(|e| e.to_string())?
    } else {
        s.split(',').map(parse_u64).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values[0] == 0 {
        return Err("grid values must be at least 1".into());
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("grid must be strictly increasing: {s:?}"));
    }
    Ok(Grid(values))
}

/// Accepts plain integers and exact powers written as `1e7`.
pub fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Some((m, e)) = s.split_once(['e', 'E']) {
        let m: u64 = m.parse().map_err(|_| format!("bad integer {s:?}"))?;
        let e: u32 = e.parse().map_err(|_| format!("bad integer {s:?}"))?;
        return 10u64
            .checked_pow(e)
            .and_then(|p| p.checked_mul(m))
            .ok_or_else(|| format!("{s} overflows u64"));
    }
    s.parse().map_err(|_| format!("bad integer {s:?}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_and_geometric() {
        assert_eq!(parse_grid("3,10,1e3").unwrap(), Grid(vec![3, 10, 1000]));
        assert_eq!(
            parse_grid("10:1000:geometric:3").unwrap(),
            Grid(vec![10, 100, 1000])
        );
        assert_eq!(parse_grid("1e3:1e7:geometric:5").unwrap().0.len(), 5);
    }

    #[test]
    fn rejects_bad_specs() {
        for s in [
            "",
            "0,1",
            "5,5",
            "10,3",
            "1:10:linear:3",
            "1:10:geometric",
            "x",
            "10:1:geometric:3",
        ] {
            assert!(parse_grid(s).is_err(), "{s}");
        }
    }

    #[test]
    fn powers_of_ten() {
        assert_eq!(parse_u64("2e3"), Ok(2000));
        assert!(parse_u64("1e20").is_err());
    }
}
