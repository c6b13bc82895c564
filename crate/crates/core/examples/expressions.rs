//! Parse an expression, differentiate it symbolically and compare the result
//! with a central difference.

use mfdstag::expr::{parse, Var};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = parse("sin(pi*x)*sin(pi*y) + x^2*exp(y)")?;
    let [px, py] = p.gradient()?;
    println!("p      = {p}");
    println!("dp/dx  = {px}");
    println!("dp/dy  = {py}");

    let (x, y) = (0.3, 0.7);
    let h = 1e-6;
    let fd = (p.eval(x + h, y)? - p.eval(x - h, y)?) / (2.0 * h);
    println!("at ({x}, {y}): symbolic {:.12} central difference {:.12}", px.eval(x, y)?, fd);

    // printed expressions parse back, so they compose as text
    let k = parse("1 + x*y")?;
    let flux_x = parse(&format!("({k})*({px})"))?;
    let div = flux_x.differentiate(Var::X)?;
    println!("d/dx (k dp/dx) = {div}");

    match parse("sin(x") {
        Ok(_) => unreachable!(),
        Err(e) => println!("syntax errors carry a position: {e}"),
    }
    Ok(())
}
