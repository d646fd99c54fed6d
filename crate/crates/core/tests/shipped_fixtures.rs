use std::path::Path;

#[test]
fn shipped_scenarios_match_the_generator() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let files = brickwork::fixtures::generate();
    for (rel, data) in &files {
        let on_disk =
            std::fs::read(root.join(rel)).unwrap_or_else(|e| panic!("{}: {e}", rel.display()));
        assert!(
            on_disk == *data,
            "{} is stale; run `brickwork fixtures scenarios`",
            rel.display()
        );
    }
    let mut count = 0;
    let mut stack = vec![root.clone()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                count += 1;
            }
        }
    }
    assert_eq!(
        count,
        files.len(),
        "unexpected extra files under scenarios/"
    );
}
