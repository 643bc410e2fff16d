fn main() {
    println!("qisvm");
}
